//! Stochastic problem families, their exact minimizers, and the hypothesis
//! constants `μ` and `B` certified over an operating ball around `X*`.
//!
//! Two families are provided:
//!
//! - **shifted quadratic**: `L(ω, X) = (μ_q/2)‖X − m − ω‖²` with every
//!   coordinate of `ω` uniform on `[−r, r]`;
//! - **finite-sum least squares**: `L(i, X) = ½(⟨a_i, X⟩ − y_i)²` with `i`
//!   uniform on `{0, …, K−1}`.
//!
//! A global bound on `‖∇L‖²` and global strong convexity cannot hold together
//! on all of `ℝ^N`, so both constants are certified on the ball
//! `‖X − X*‖ ≤ R_op` only.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest dimension accepted for the finite-sum family.
pub const MAX_FINITE_SUM_DIMENSION: usize = 64;

/// Relative residual required of the normal-equation solve.
const NORMAL_EQUATION_TOLERANCE: f64 = 1e-12;

/// Relative tolerance used when deciding whether an audit sample violates a
/// certified inequality.
pub const AUDIT_TOLERANCE: f64 = 1e-9;

/// Relative error allowed between analytic and finite-difference gradients.
pub const GRADIENT_CHECK_TOLERANCE: f64 = 1e-6;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sq_norm(a: &[f64]) -> f64 {
    dot(a, a)
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A point of `ℝ^N` with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "coordinate {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self(values))
    }

    pub fn zeros(dimension: usize) -> Self {
        Self(vec![0.0; dimension])
    }

    /// Wraps values already known to be finite.
    pub(crate) fn from_finite(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        sq_norm(&self.0).sqrt()
    }

    pub fn dot(&self, other: &ParameterVector) -> Result<f64> {
        check_dimension(self.len(), other.len())?;
        Ok(dot(&self.0, &other.0))
    }

    /// `‖self − other‖²`.
    pub fn sq_dist(&self, other: &ParameterVector) -> Result<f64> {
        check_dimension(self.len(), other.len())?;
        Ok(sq_dist(&self.0, &other.0))
    }
}

impl<'de> Deserialize<'de> for ParameterVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(deserializer)?;
        ParameterVector::new(values).map_err(serde::de::Error::custom)
    }
}

impl std::ops::Index<usize> for ParameterVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

fn check_dimension(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension { expected, actual })
    }
}

/// One draw `ω` from a problem's noise law.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSample {
    /// Additive shift of the quadratic's center.
    Shift(Vec<f64>),
    /// Index of the sampled least-squares term.
    Index(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedQuadratic {
    curvature: f64,
    center: ParameterVector,
    noise_half_width: f64,
}

impl ShiftedQuadratic {
    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    pub fn center(&self) -> &ParameterVector {
        &self.center
    }

    pub fn noise_half_width(&self) -> f64 {
        self.noise_half_width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSumLeastSquares {
    rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
    minimizer: ParameterVector,
    min_eigenvalue: f64,
}

impl FiniteSumLeastSquares {
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Smallest eigenvalue of `(1/K) Σ a_i a_iᵀ`.
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        dot(&self.rows[i], x) - self.targets[i]
    }
}

/// A stochastic objective `L(ω, X)` together with the law of `ω`.
///
/// Values are immutable after construction; sampling state lives in the
/// caller's generator.
#[derive(Debug, Clone, PartialEq)]
pub enum StochasticProblem {
    ShiftedQuadratic(ShiftedQuadratic),
    FiniteSumLeastSquares(FiniteSumLeastSquares),
}

impl StochasticProblem {
    /// `L(ω, X) = (mu_q/2)‖X − center − ω‖²` with `ω_j ~ U[−r, r]`.
    pub fn shifted_quadratic(mu_q: f64, center: ParameterVector, r: f64) -> Result<Self> {
        if !(mu_q.is_finite() && mu_q > 0.0) {
            return Err(Error::config("problem.mu_q", format!("must be finite and > 0, got {mu_q}")));
        }
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::config("problem.r", format!("must be finite and >= 0, got {r}")));
        }
        if center.is_empty() {
            return Err(Error::config("problem.m", "dimension must be positive"));
        }
        Ok(StochasticProblem::ShiftedQuadratic(ShiftedQuadratic {
            curvature: mu_q,
            center,
            noise_half_width: r,
        }))
    }

    /// `L(i, X) = ½(⟨a_i, X⟩ − y_i)²` with `i` uniform over the rows.
    ///
    /// Solves the normal equations and computes the smallest eigenvalue of the
    /// averaged Gram matrix up front; a rank-deficient design is rejected.
    pub fn finite_sum(rows: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::config("problem.rows", "at least one row is required"));
        }
        if targets.len() != k {
            return Err(Error::config(
                "problem.targets",
                format!("expected {k} targets, got {}", targets.len()),
            ));
        }
        let n = rows[0].len();
        if n == 0 {
            return Err(Error::config("problem.rows", "dimension must be positive"));
        }
        if n > MAX_FINITE_SUM_DIMENSION {
            return Err(Error::config(
                "problem.rows",
                format!("dimension {n} exceeds the supported maximum {MAX_FINITE_SUM_DIMENSION}"),
            ));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::config(
                "problem.rows",
                format!("row {i} has length {}, expected {n}", rows[i].len()),
            ));
        }
        if rows.iter().flatten().chain(&targets).any(|v| !v.is_finite()) {
            return Err(Error::config("problem.rows", "design and targets must be finite"));
        }
        if k < n {
            return Err(Error::config(
                "problem.rows",
                format!("need at least as many rows as columns ({k} < {n})"),
            ));
        }

        let design = DMatrix::from_fn(k, n, |i, j| rows[i][j]);
        let y = DVector::from_column_slice(&targets);
        let gram = design.transpose() * &design;
        let rhs = design.transpose() * &y;

        let averaged = &gram / k as f64;
        let eigen = SymmetricEigen::try_new(averaged, f64::EPSILON, 100_000).ok_or_else(|| {
            Error::Certification("symmetric eigen-solver did not converge".into())
        })?;
        let min_eigenvalue = eigen.eigenvalues.min();
        let max_eigenvalue = eigen.eigenvalues.max();
        if !(min_eigenvalue > 1e-12 * max_eigenvalue.max(f64::MIN_POSITIVE)) {
            return Err(Error::Certification(format!(
                "design matrix is rank deficient (smallest Gram eigenvalue {min_eigenvalue:e})"
            )));
        }

        let minimizer = solve_normal_equations(&gram, &rhs)?;
        let problem = FiniteSumLeastSquares {
            rows,
            targets,
            minimizer: ParameterVector::new(minimizer.as_slice().to_vec())
                .map_err(|e| Error::Certification(e.to_string()))?,
            min_eigenvalue,
        };
        let problem = StochasticProblem::FiniteSumLeastSquares(problem);

        let star = problem.minimizer();
        let grad_norm = problem.mean_gradient(star)?.norm();
        if grad_norm > 1e-9 * (1.0 + star.norm()) {
            return Err(Error::Certification(format!(
                "minimizer gradient norm {grad_norm:e} too large"
            )));
        }
        Ok(problem)
    }

    pub fn dimension(&self) -> usize {
        match self {
            StochasticProblem::ShiftedQuadratic(q) => q.center.len(),
            StochasticProblem::FiniteSumLeastSquares(f) => f.minimizer.len(),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            StochasticProblem::ShiftedQuadratic(_) => "shifted_quadratic",
            StochasticProblem::FiniteSumLeastSquares(_) => "finite_sum_least_squares",
        }
    }

    /// Draws one `ω` from the problem's law.
    pub fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> NoiseSample {
        match self {
            StochasticProblem::ShiftedQuadratic(q) => {
                let r = q.noise_half_width;
                let shift = (0..q.center.len())
                    .map(|_| {
                        let u: f64 = rng.random();
                        r * (2.0 * u - 1.0)
                    })
                    .collect();
                NoiseSample::Shift(shift)
            }
            StochasticProblem::FiniteSumLeastSquares(f) => {
                NoiseSample::Index(rng.random_range(0..f.rows.len()))
            }
        }
    }

    /// `∇_X L(ω, X)`.
    pub fn pointwise_gradient(&self, omega: &NoiseSample, x: &ParameterVector) -> Result<ParameterVector> {
        check_dimension(self.dimension(), x.len())?;
        let mut out = vec![0.0; x.len()];
        self.gradient_into(omega, x.as_slice(), &mut out)?;
        ParameterVector::new(out)
    }

    /// Writes `∇_X L(ω, X)` into `out`. `x` and `out` must have the problem's
    /// dimension.
    pub(crate) fn gradient_into(&self, omega: &NoiseSample, x: &[f64], out: &mut [f64]) -> Result<()> {
        match (self, omega) {
            (StochasticProblem::ShiftedQuadratic(q), NoiseSample::Shift(w)) => {
                check_dimension(x.len(), w.len())?;
                for (((o, xi), mi), wi) in out.iter_mut().zip(x).zip(q.center.as_slice()).zip(w) {
                    *o = q.curvature * (xi - mi - wi);
                }
                Ok(())
            }
            (StochasticProblem::FiniteSumLeastSquares(f), NoiseSample::Index(i)) => {
                let row = f.rows.get(*i).ok_or_else(|| Error::usage(format!("index {i} out of range")))?;
                let residual = f.residual(*i, x);
                for (o, a) in out.iter_mut().zip(row) {
                    *o = a * residual;
                }
                Ok(())
            }
            _ => Err(Error::usage("noise sample does not belong to this problem family")),
        }
    }

    /// `L(ω, X)`.
    pub fn pointwise_loss(&self, omega: &NoiseSample, x: &ParameterVector) -> Result<f64> {
        check_dimension(self.dimension(), x.len())?;
        match (self, omega) {
            (StochasticProblem::ShiftedQuadratic(q), NoiseSample::Shift(w)) => {
                check_dimension(x.len(), w.len())?;
                let s: f64 = x
                    .as_slice()
                    .iter()
                    .zip(q.center.as_slice())
                    .zip(w)
                    .map(|((xi, mi), wi)| (xi - mi - wi).powi(2))
                    .sum();
                Ok(0.5 * q.curvature * s)
            }
            (StochasticProblem::FiniteSumLeastSquares(f), NoiseSample::Index(i)) => {
                if *i >= f.rows.len() {
                    return Err(Error::usage(format!("index {i} out of range")));
                }
                Ok(0.5 * f.residual(*i, x.as_slice()).powi(2))
            }
            _ => Err(Error::usage("noise sample does not belong to this problem family")),
        }
    }

    /// Closed-form mean objective `E_ω L(ω, X)`.
    pub fn mean_loss(&self, x: &ParameterVector) -> Result<f64> {
        check_dimension(self.dimension(), x.len())?;
        match self {
            StochasticProblem::ShiftedQuadratic(q) => {
                let n = q.center.len() as f64;
                let r = q.noise_half_width;
                Ok(0.5 * q.curvature * sq_dist(x.as_slice(), q.center.as_slice())
                    + 0.5 * q.curvature * n * r * r / 3.0)
            }
            StochasticProblem::FiniteSumLeastSquares(f) => {
                let k = f.rows.len();
                let s: f64 = (0..k).map(|i| f.residual(i, x.as_slice()).powi(2)).sum();
                Ok(s / (2.0 * k as f64))
            }
        }
    }

    /// Closed-form `∇𝓛(X)`.
    pub fn mean_gradient(&self, x: &ParameterVector) -> Result<ParameterVector> {
        check_dimension(self.dimension(), x.len())?;
        let out = match self {
            StochasticProblem::ShiftedQuadratic(q) => x
                .as_slice()
                .iter()
                .zip(q.center.as_slice())
                .map(|(xi, mi)| q.curvature * (xi - mi))
                .collect(),
            StochasticProblem::FiniteSumLeastSquares(f) => {
                let k = f.rows.len();
                let mut g = vec![0.0; x.len()];
                for i in 0..k {
                    let residual = f.residual(i, x.as_slice());
                    for (gj, a) in g.iter_mut().zip(&f.rows[i]) {
                        *gj += a * residual;
                    }
                }
                g.iter_mut().for_each(|gj| *gj /= k as f64);
                g
            }
        };
        ParameterVector::new(out)
    }

    /// The unique minimizer `X*` of the mean objective.
    pub fn minimizer(&self) -> &ParameterVector {
        match self {
            StochasticProblem::ShiftedQuadratic(q) => &q.center,
            StochasticProblem::FiniteSumLeastSquares(f) => &f.minimizer,
        }
    }

    /// Certifies `μ` and `B` on the ball of radius `region_radius` around `X*`.
    ///
    /// Shifted quadratic: `μ = μ_q`, `B = μ_q²(R_op + r√N)²`. Finite sum:
    /// `μ = λ_min((1/K) Σ a_i a_iᵀ)` and
    /// `B = max_i (‖a_i‖(‖a_i‖ R_op + |⟨a_i, X*⟩ − y_i|))²`.
    pub fn certify_constants(&self, region_radius: f64, x0: &ParameterVector) -> Result<HypothesisCertificate> {
        check_dimension(self.dimension(), x0.len())?;
        if !(region_radius.is_finite() && region_radius > 0.0) {
            return Err(Error::Certification(format!(
                "operating radius must be finite and > 0, got {region_radius}"
            )));
        }
        let star = self.minimizer();
        let start_distance = sq_dist(x0.as_slice(), star.as_slice()).sqrt();
        if region_radius < start_distance {
            return Err(Error::Certification(format!(
                "operating radius {region_radius} is smaller than ‖X0 − X*‖ = {start_distance}"
            )));
        }

        let cert = match self {
            StochasticProblem::ShiftedQuadratic(q) => {
                let noise_radius = q.noise_half_width * (q.center.len() as f64).sqrt();
                let reach = region_radius + noise_radius;
                let b = q.curvature * q.curvature * reach * reach;
                let contained = region_radius >= start_distance.max(noise_radius);
                HypothesisCertificate {
                    mu: q.curvature,
                    gradient_bound: b,
                    region_center: star.clone(),
                    region_radius,
                    guaranteed_containment: contained,
                    provenance: vec![
                        format!("mu = mu_q = {}", q.curvature),
                        format!(
                            "B = mu_q^2 (R_op + r sqrt(N))^2 = {}^2 ({} + {})^2 = {b}",
                            q.curvature, region_radius, noise_radius
                        ),
                        format!(
                            "containment {} (R_op {} max(|X0 - m|, r sqrt(N)) = {})",
                            if contained { "guaranteed when rho_n mu_q <= 1" } else { "not guaranteed" },
                            if contained { ">=" } else { "<" },
                            start_distance.max(noise_radius)
                        ),
                    ],
                }
            }
            StochasticProblem::FiniteSumLeastSquares(f) => {
                let (b, worst) = f
                    .rows
                    .iter()
                    .enumerate()
                    .map(|(i, a)| {
                        let a_norm = sq_norm(a).sqrt();
                        let residual = f.residual(i, star.as_slice()).abs();
                        ((a_norm * (a_norm * region_radius + residual)).powi(2), i)
                    })
                    .fold((0.0_f64, 0), |acc, v| if v.0 > acc.0 { v } else { acc });
                HypothesisCertificate {
                    mu: f.min_eigenvalue,
                    gradient_bound: b,
                    region_center: star.clone(),
                    region_radius,
                    guaranteed_containment: false,
                    provenance: vec![
                        format!("mu = smallest eigenvalue of (1/K) sum a_i a_i^T = {}", f.min_eigenvalue),
                        format!("B = max_i (|a_i| (|a_i| R_op + |<a_i, X*> - y_i|))^2 = {b} (row {worst})"),
                        "containment monitored at runtime".to_string(),
                    ],
                }
            }
        };
        if !(cert.gradient_bound > 0.0 && cert.gradient_bound.is_finite()) {
            return Err(Error::Certification(format!(
                "gradient bound must be positive and finite, got {}",
                cert.gradient_bound
            )));
        }
        Ok(cert)
    }
}

fn solve_normal_equations(gram: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Certification("normal equations are not positive definite".into()))?;
    let mut x = chol.solve(rhs);
    let scale = |x: &DVector<f64>| gram.norm() * x.norm() + rhs.norm();
    // A few rounds of iterative refinement bring the residual to round-off.
    for _ in 0..5 {
        let residual = rhs - gram * &x;
        if residual.norm() <= NORMAL_EQUATION_TOLERANCE * scale(&x) {
            return Ok(x);
        }
        x += chol.solve(&residual);
    }
    let residual = (rhs - gram * &x).norm();
    if residual <= NORMAL_EQUATION_TOLERANCE * scale(&x) {
        Ok(x)
    } else {
        Err(Error::Certification(format!(
            "normal equations residual {residual:e} above tolerance"
        )))
    }
}

/// The constants `μ` and `B` and the ball on which they hold.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisCertificate {
    /// Strong-convexity constant of the mean objective.
    pub mu: f64,
    /// Bound on `‖∇_X L(ω, X)‖²` over the region and the noise support.
    pub gradient_bound: f64,
    pub region_center: ParameterVector,
    pub region_radius: f64,
    /// True when every SGD iterate provably stays in the region, provided
    /// `ρ_n μ ≤ 1` for all `n`.
    pub guaranteed_containment: bool,
    /// How each constant was obtained, for audit logs.
    pub provenance: Vec<String>,
}

impl HypothesisCertificate {
    pub fn contains(&self, x: &[f64]) -> bool {
        sq_dist(x, self.region_center.as_slice()).sqrt() <= self.region_radius
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.provenance.push(format!("mu overridden: {} -> {mu}", self.mu));
        self.mu = mu;
        self
    }

    pub fn with_gradient_bound(mut self, bound: f64) -> Self {
        self.provenance
            .push(format!("B overridden: {} -> {bound}", self.gradient_bound));
        self.gradient_bound = bound;
        self
    }
}

/// Outcome of a randomized audit of a certificate.
#[derive(Debug, Clone)]
pub struct AuditReport {
    pub samples: usize,
    /// Largest observed `‖∇L(ω, X)‖² / B`.
    pub max_gradient_ratio: f64,
    /// Smallest observed slack of the strong-convexity inequality, relative
    /// to the magnitude of its terms. Negative means violated.
    pub min_convexity_slack: f64,
    pub gradient_violations: usize,
    pub convexity_violations: usize,
    /// Sample attaining the largest gradient ratio when it exceeds the bound.
    pub gradient_witness: Option<(NoiseSample, ParameterVector)>,
    /// Pair `(X, Y)` attaining the smallest slack when it is a violation.
    pub convexity_witness: Option<(ParameterVector, ParameterVector)>,
    pub pass: bool,
}

/// Uniform draw from the ball of radius `radius` around `center`.
pub fn sample_in_ball<R: Rng + ?Sized>(center: &[f64], radius: f64, rng: &mut R) -> Vec<f64> {
    let n = center.len();
    let mut direction: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mut norm = sq_norm(&direction).sqrt();
    while norm == 0.0 {
        direction = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        norm = sq_norm(&direction).sqrt();
    }
    let u: f64 = rng.random();
    let scale = radius * u.powf(1.0 / n as f64) / norm;
    center.iter().zip(&direction).map(|(c, d)| c + scale * d).collect()
}

/// Draws `n_samples` triples `(ω, X, Y)` with `X, Y` uniform in the
/// certified ball and checks the gradient bound and strong convexity.
///
/// Violations are reported in the returned value, not raised.
pub fn audit_certificate<R: Rng + ?Sized>(
    problem: &StochasticProblem,
    cert: &HypothesisCertificate,
    n_samples: usize,
    rng: &mut R,
) -> Result<AuditReport> {
    if n_samples == 0 {
        return Err(Error::usage("audit needs at least one sample"));
    }
    check_dimension(problem.dimension(), cert.region_center.len())?;
    let center = cert.region_center.as_slice();
    let mut report = AuditReport {
        samples: n_samples,
        max_gradient_ratio: 0.0,
        min_convexity_slack: f64::INFINITY,
        gradient_violations: 0,
        convexity_violations: 0,
        gradient_witness: None,
        convexity_witness: None,
        pass: true,
    };
    let mut grad = vec![0.0; problem.dimension()];
    for _ in 0..n_samples {
        let omega = problem.sample_noise(rng);
        let x = ParameterVector::from_finite(sample_in_ball(center, cert.region_radius, rng));
        let y = ParameterVector::from_finite(sample_in_ball(center, cert.region_radius, rng));

        problem.gradient_into(&omega, x.as_slice(), &mut grad)?;
        let ratio = sq_norm(&grad) / cert.gradient_bound;
        if ratio > 1.0 + AUDIT_TOLERANCE {
            report.gradient_violations += 1;
        }
        if ratio > report.max_gradient_ratio {
            report.max_gradient_ratio = ratio;
            if ratio > 1.0 + AUDIT_TOLERANCE {
                report.gradient_witness = Some((omega, x.clone()));
            }
        }

        let lx = problem.mean_loss(&x)?;
        let ly = problem.mean_loss(&y)?;
        let gx = problem.mean_gradient(&x)?;
        let diff: Vec<f64> = y.as_slice().iter().zip(x.as_slice()).map(|(a, b)| a - b).collect();
        let linear = dot(gx.as_slice(), &diff);
        let quadratic = 0.5 * cert.mu * sq_norm(&diff);
        let slack = ly - lx - linear - quadratic;
        let scale = lx.abs().max(ly.abs()).max(linear.abs()).max(quadratic).max(f64::MIN_POSITIVE);
        let relative = slack / scale;
        if relative < -AUDIT_TOLERANCE {
            report.convexity_violations += 1;
        }
        if relative < report.min_convexity_slack {
            report.min_convexity_slack = relative;
            if relative < -AUDIT_TOLERANCE {
                report.convexity_witness = Some((x, y));
            }
        }
    }
    report.pass = report.gradient_violations == 0 && report.convexity_violations == 0;
    Ok(report)
}

/// Result of comparing analytic gradients with central finite differences.
#[derive(Debug, Clone)]
pub struct GradientCheckReport {
    pub points: usize,
    /// Largest `|fd − g| / max(|g|, 1)` over all coordinates and points.
    pub max_relative_error: f64,
    pub pass: bool,
}

/// Checks `pointwise_gradient` against central differences of
/// `pointwise_loss` at `points` random `(ω, X)`, with `X` uniform in a ball of
/// radius `1 + ‖X*‖` around `X*` and step `h = 1e−6 (1 + ‖X‖)`.
pub fn check_gradients<R: Rng + ?Sized>(
    problem: &StochasticProblem,
    points: usize,
    rng: &mut R,
) -> Result<GradientCheckReport> {
    if points == 0 {
        return Err(Error::usage("gradient check needs at least one point"));
    }
    let star = problem.minimizer();
    let radius = 1.0 + star.norm();
    let mut worst = 0.0_f64;
    for _ in 0..points {
        let omega = problem.sample_noise(rng);
        let x = ParameterVector::from_finite(sample_in_ball(star.as_slice(), radius, rng));
        let g = problem.pointwise_gradient(&omega, &x)?;
        let h = 1e-6 * (1.0 + x.norm());
        for j in 0..x.len() {
            let mut plus = x.clone().into_inner();
            let mut minus = plus.clone();
            plus[j] += h;
            minus[j] -= h;
            let lp = problem.pointwise_loss(&omega, &ParameterVector::from_finite(plus))?;
            let lm = problem.pointwise_loss(&omega, &ParameterVector::from_finite(minus))?;
            let fd = (lp - lm) / (2.0 * h);
            let err = (fd - g[j]).abs() / g[j].abs().max(1.0);
            worst = worst.max(err);
        }
    }
    Ok(GradientCheckReport {
        points,
        max_relative_error: worst,
        pass: worst <= GRADIENT_CHECK_TOLERANCE,
    })
}
