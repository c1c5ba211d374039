//! The SGD recursion `X_{n+1} = X_n − ρ_n ∇_X L(ω_n, X_n)` with one fresh
//! `ω_n` per step, no projection and no clipping.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::objective::{sq_dist, HypothesisCertificate, NoiseSample, ParameterVector, StochasticProblem};
use crate::schedule::Schedule;

/// ChaCha8 stream keyed by a 64-bit seed.
///
/// ChaCha output and the `seed_from_u64` expansion are fixed by the
/// `rand_chacha` value-stability guarantee, so a seed yields the same stream
/// on every platform.
#[derive(Debug, Clone)]
pub struct SeededGenerator {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededGenerator {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl RngCore for SeededGenerator {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer; a bijection on `u64`.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `index` under `master_seed`:
/// `mix64(master_seed + (index + 1)·γ)` with the SplitMix64 constants.
///
/// For a fixed master seed the map is injective in `index` over all of `u64`,
/// since `γ` is odd and `mix64` is a bijection.
pub fn derive_seed(master_seed: u64, replication_index: u64) -> u64 {
    mix64(master_seed.wrapping_add(replication_index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// One SGD update `X − ρ g`.
pub fn step(x: &ParameterVector, rho: f64, g: &ParameterVector) -> Result<ParameterVector> {
    if x.len() != g.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            actual: g.len(),
        });
    }
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::usage(format!("learning rate must be finite and > 0, got {rho}")));
    }
    let next: Vec<f64> = x.as_slice().iter().zip(g.as_slice()).map(|(xi, gi)| xi - rho * gi).collect();
    ParameterVector::new(next).map_err(|_| Error::NonFinite)
}

/// What happened during one call to [`Sgd::advance`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Index `n` of the iterate the update was applied to.
    pub index: usize,
    pub rho: f64,
    pub omega: NoiseSample,
}

/// A running SGD chain owning its generator.
#[derive(Debug, Clone)]
pub struct Sgd<'a> {
    problem: &'a StochasticProblem,
    schedule: &'a Schedule,
    rng: SeededGenerator,
    x: Vec<f64>,
    grad: Vec<f64>,
    n: usize,
}

impl<'a> Sgd<'a> {
    pub fn new(problem: &'a StochasticProblem, schedule: &'a Schedule, x0: &ParameterVector, seed: u64) -> Result<Self> {
        if x0.len() != problem.dimension() {
            return Err(Error::Dimension {
                expected: problem.dimension(),
                actual: x0.len(),
            });
        }
        Ok(Self {
            problem,
            schedule,
            rng: SeededGenerator::new(seed),
            x: x0.as_slice().to_vec(),
            grad: vec![0.0; x0.len()],
            n: 0,
        })
    }

    /// Number of updates applied so far.
    pub fn iteration(&self) -> usize {
        self.n
    }

    pub fn iterate(&self) -> &[f64] {
        &self.x
    }

    /// Draws `ω_n`, applies the update, and returns what was used.
    pub fn advance(&mut self) -> Result<StepRecord> {
        let index = self.n;
        let rho = self.schedule.rate(index as u64);
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::usage(format!("rate at step {index} is not positive ({rho})")));
        }
        let omega = self.problem.sample_noise(&mut self.rng);
        self.problem.gradient_into(&omega, &self.x, &mut self.grad)?;
        for (xi, gi) in self.x.iter_mut().zip(&self.grad) {
            *xi -= rho * gi;
        }
        self.n += 1;
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: self.n });
        }
        Ok(StepRecord { index, rho, omega })
    }
}

/// Per-step record of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub steps: usize,
    /// `‖X_n − X*‖²` for `n = 0..=steps`.
    pub sq_dist: Vec<f64>,
    /// Whether `X_n` lies in the certified ball, for `n = 0..=steps`.
    pub in_region: Vec<bool>,
    pub final_x: ParameterVector,
}

/// Runs `steps` SGD updates from `x0` with a generator seeded by `seed`.
pub fn run_replication(
    problem: &StochasticProblem,
    schedule: &Schedule,
    cert: &HypothesisCertificate,
    x0: &ParameterVector,
    steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::usage("horizon must be at least 1"));
    }
    let star = problem.minimizer().as_slice();
    let mut sgd = Sgd::new(problem, schedule, x0, seed)?;
    let mut sq = Vec::with_capacity(steps + 1);
    let mut in_region = Vec::with_capacity(steps + 1);
    sq.push(sq_dist(sgd.iterate(), star));
    in_region.push(cert.contains(sgd.iterate()));
    for _ in 0..steps {
        sgd.advance()?;
        let d = sq_dist(sgd.iterate(), star);
        if !d.is_finite() {
            return Err(Error::Divergence { step: sgd.iteration() });
        }
        sq.push(d);
        in_region.push(cert.contains(sgd.iterate()));
    }
    Ok(Trajectory {
        seed,
        steps,
        sq_dist: sq,
        in_region,
        final_x: ParameterVector::new(sgd.iterate().to_vec())?,
    })
}

/// Runs `replications` independent chains in parallel, seeded with
/// [`derive_seed`]. The output is ordered by replication index and does not
/// depend on the thread count. On failure the error of the lowest failing
/// index is returned.
pub fn run_replications(
    problem: &StochasticProblem,
    schedule: &Schedule,
    cert: &HypothesisCertificate,
    x0: &ParameterVector,
    steps: usize,
    master_seed: u64,
    replications: usize,
) -> Result<Vec<Trajectory>> {
    (0..replications as u64)
        .into_par_iter()
        .map(|i| run_replication(problem, schedule, cert, x0, steps, derive_seed(master_seed, i)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}
