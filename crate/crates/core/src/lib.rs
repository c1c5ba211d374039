//! Plain stochastic gradient descent on strongly convex stochastic problems,
//! together with the machinery to check its classical convergence bounds
//! empirically.
//!
//! The crate is organised bottom-up:
//!
//! - [`objective`]: problem families `L(ω, X)`, their mean objective, exact
//!   minimizer, and certified hypothesis constants `μ` (strong convexity) and
//!   `B` (squared gradient bound) over an operating ball.
//! - [`schedule`]: deterministic learning-rate sequences `ρ_n`.
//! - [`engine`]: the unprojected update `X_{n+1} = X_n − ρ_n ∇L(ω_n, X_n)` with
//!   seeded, replayable randomness.
//! - [`analyzer`]: Monte Carlo estimates of `d_n = E‖X_n − X*‖²`, the envelope
//!   `b_{n+1} = (1 − ρ_n μ) b_n + ρ_n² B`, and verdicts on the bounds.
//! - [`cli`]: JSON experiment configs, CSV/report output and the
//!   `run` / `verify` / `lemma` commands behind the `sgd-verify` binary.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analyzer;
pub mod cli;
pub mod engine;
mod error;
pub mod objective;
pub mod presets;
pub mod schedule;
mod stats;

pub use error::{Error, Result};
pub use objective::{HypothesisCertificate, NoiseSample, ParameterVector, StochasticProblem};
pub use schedule::Schedule;
