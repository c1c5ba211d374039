//! Monte Carlo estimates of `d_n = E‖X_n − X*‖²`, the envelope
//! `b_{n+1} = (1 − ρ_n μ) b_n + ρ_n² B`, and pass/fail verdicts on the
//! convergence bounds.
//!
//! Every comparison between an estimate and a deterministic bound allows a
//! one-sided band of `z` standard errors.

use rand::Rng;

use crate::engine::Trajectory;
use crate::error::{Error, Result};
use crate::objective::{dot, sq_dist, HypothesisCertificate, ParameterVector, StochasticProblem};
use crate::schedule::Schedule;
use crate::stats::{mean_and_stderr, neumaier_sum};

/// Default confidence multiplier for the recurrence check.
pub const DEFAULT_Z: f64 = 3.0;
/// Default relative tolerance of the neighborhood check.
pub const DEFAULT_NEIGHBORHOOD_TOL: f64 = 0.2;
/// Band, in standard errors, used by the neighborhood and convergence checks.
pub const CHECKPOINT_Z: f64 = 3.0;
/// Band used when the descent estimate is cross-checked against its closed form.
pub const CROSS_CHECK_Z: f64 = 5.0;

/// Default tail window `max(100, T/10)`, capped at the `T + 1` recorded steps.
pub fn default_window(horizon: usize) -> usize {
    (horizon / 10).max(100).min(horizon + 1)
}

/// Monte Carlo estimate of `d_n` for `n = 0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DnSeries {
    pub replications: usize,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub in_region_fraction: Vec<f64>,
}

impl DnSeries {
    pub fn horizon(&self) -> usize {
        self.mean.len() - 1
    }
}

/// Averages `‖X_n − X*‖²` over replications. The reduction sorts the values at
/// each step, so the result is independent of the order of `trajectories`.
pub fn estimate_dn(trajectories: &[Trajectory]) -> Result<DnSeries> {
    let m = trajectories.len();
    if m < 2 {
        return Err(Error::usage(format!("need at least 2 replications, got {m}")));
    }
    let len = trajectories[0].sq_dist.len();
    if let Some(t) = trajectories
        .iter()
        .find(|t| t.sq_dist.len() != len || t.in_region.len() != len)
    {
        return Err(Error::usage(format!(
            "mismatched horizons: {} vs {}",
            t.sq_dist.len() - 1,
            len - 1
        )));
    }
    let mut mean = Vec::with_capacity(len);
    let mut stderr = Vec::with_capacity(len);
    let mut fraction = Vec::with_capacity(len);
    let mut column = vec![0.0; m];
    for n in 0..len {
        for (c, t) in column.iter_mut().zip(trajectories) {
            *c = t.sq_dist[n];
        }
        let (mu, se) = mean_and_stderr(&mut column);
        mean.push(mu);
        stderr.push(se);
        let inside = trajectories.iter().filter(|t| t.in_region[n]).count();
        fraction.push(inside as f64 / m as f64);
    }
    Ok(DnSeries {
        replications: m,
        mean,
        stderr,
        in_region_fraction: fraction,
    })
}

/// The deterministic envelope obtained by iterating the one-step bound with
/// equality.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSequence {
    pub b: Vec<f64>,
}

/// `b_0 = d0`, `b_{n+1} = (1 − ρ_n μ) b_n + ρ_n² B` for `n < T`.
pub fn bound_sequence(d0: f64, schedule: &Schedule, cert: &HypothesisCertificate, horizon: usize) -> Result<BoundSequence> {
    if !(d0.is_finite() && d0 >= 0.0) {
        return Err(Error::usage(format!("d0 must be finite and >= 0, got {d0}")));
    }
    if horizon == 0 {
        return Err(Error::usage("horizon must be at least 1"));
    }
    let mut b = Vec::with_capacity(horizon + 1);
    b.push(d0);
    let mut current = d0;
    for n in 0..horizon {
        let rho = schedule.rate(n as u64);
        current = (1.0 - rho * cert.mu) * current + rho * rho * cert.gradient_bound;
        b.push(current);
    }
    Ok(BoundSequence { b })
}

/// Outcome of a check.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub pass: bool,
    pub first_violation_index: Option<usize>,
    /// Most negative slack observed (bound + band − estimate); positive when
    /// every step has room to spare.
    pub worst_margin: f64,
    /// Number of indices actually compared.
    pub checked: usize,
    pub violations: usize,
    pub context: String,
}

impl Verdict {
    fn from_slacks(slacks: impl IntoIterator<Item = (usize, f64)>, context: String) -> Self {
        let mut first = None;
        let mut worst = f64::INFINITY;
        let mut checked = 0;
        let mut violations = 0;
        for (n, slack) in slacks {
            checked += 1;
            worst = worst.min(slack);
            if slack < 0.0 || slack.is_nan() {
                violations += 1;
                first.get_or_insert(n);
            }
        }
        Verdict {
            pass: first.is_none(),
            first_violation_index: first,
            worst_margin: worst,
            checked,
            violations,
            context,
        }
    }
}

/// `mean_n ≤ b_n + z·stderr_n` at every step where all replications were in
/// the certified region. Steps with region exits are excluded.
pub fn check_recurrence(dn: &DnSeries, bound: &BoundSequence, z: f64) -> Result<Verdict> {
    if !(z >= 0.0) {
        return Err(Error::usage(format!("z must be >= 0, got {z}")));
    }
    if bound.b.len() != dn.mean.len() {
        return Err(Error::usage(format!(
            "bound has {} entries, series has {}",
            bound.b.len(),
            dn.mean.len()
        )));
    }
    let excluded: Vec<usize> = (0..dn.mean.len())
        .filter(|&n| dn.in_region_fraction[n] < 1.0)
        .collect();
    let slacks = (0..dn.mean.len())
        .filter(|&n| dn.in_region_fraction[n] >= 1.0)
        .map(|n| (n, bound.b[n] + z * dn.stderr[n] - dn.mean[n]));
    let mut context = format!("recurrence envelope, z = {z}");
    if !excluded.is_empty() {
        context.push_str(&format!(
            "; {} step(s) excluded for region exits (first at n = {})",
            excluded.len(),
            excluded[0]
        ));
    }
    Ok(Verdict::from_slacks(slacks, context))
}

/// Asymptotic level `ρ B / μ` of a constant-rate run.
pub fn neighborhood_level(rho: f64, cert: &HypothesisCertificate) -> f64 {
    rho * cert.gradient_bound / cert.mu
}

/// `mean_n ≤ θ(1 + tol_rel) + 3·stderr_n` over the last `window` steps, with
/// `θ = ρ B / μ`.
pub fn check_neighborhood(
    dn: &DnSeries,
    cert: &HypothesisCertificate,
    schedule: &Schedule,
    window: usize,
    tol_rel: f64,
) -> Result<Verdict> {
    let Schedule::Constant { rho } = *schedule else {
        return Err(Error::usage(format!(
            "neighborhood check needs a constant schedule, got {}",
            schedule.describe()
        )));
    };
    if rho * cert.mu >= 1.0 {
        return Err(Error::usage(format!("rho mu = {} must be < 1", rho * cert.mu)));
    }
    if window == 0 || window > dn.mean.len() {
        return Err(Error::usage(format!(
            "window must be in [1, {}], got {window}",
            dn.mean.len()
        )));
    }
    if !(tol_rel >= 0.0) {
        return Err(Error::usage(format!("tol_rel must be >= 0, got {tol_rel}")));
    }
    let theta = neighborhood_level(rho, cert);
    let start = dn.mean.len() - window;
    let slacks = (start..dn.mean.len()).map(|n| (n, theta * (1.0 + tol_rel) + CHECKPOINT_Z * dn.stderr[n] - dn.mean[n]));
    let context = format!(
        "neighborhood level theta = rho B / mu = {theta:.6e} over steps {start}..={}; \
         any eps >= theta is reached (rho < 1/mu and rho <= eps mu / B)",
        dn.horizon()
    );
    Ok(Verdict::from_slacks(slacks, context))
}

/// `mean_n ≤ threshold + 3·stderr_n` at each `(n, threshold)` checkpoint.
pub fn check_convergence(dn: &DnSeries, checkpoints: &[(usize, f64)]) -> Result<Verdict> {
    if checkpoints.windows(2).any(|w| w[0].0 > w[1].0) {
        return Err(Error::usage("checkpoints must be sorted by step"));
    }
    if let Some(&(n, _)) = checkpoints.iter().find(|c| c.0 > dn.horizon()) {
        return Err(Error::usage(format!(
            "checkpoint {n} lies beyond horizon {}",
            dn.horizon()
        )));
    }
    let slacks = checkpoints
        .iter()
        .map(|&(n, threshold)| (n, threshold + CHECKPOINT_Z * dn.stderr[n] - dn.mean[n]));
    Ok(Verdict::from_slacks(
        slacks,
        format!("{} convergence checkpoint(s)", checkpoints.len()),
    ))
}

/// `∏_{ℓ=n}^{n+k} (1 − ρ_ℓ μ)` and its majorant `exp(−μ Σ ρ_ℓ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductDecay {
    pub product: f64,
    pub majorant: f64,
    pub log_product: f64,
    pub log_majorant: f64,
}

/// Evaluates the product in log domain with compensated summation.
pub fn product_decay(schedule: &Schedule, mu: f64, n: u64, k: u64) -> Result<ProductDecay> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::Domain(format!("mu must be finite and > 0, got {mu}")));
    }
    let last = n
        .checked_add(k)
        .ok_or_else(|| Error::Domain("index range overflows".into()))?;
    let mut logs = Vec::with_capacity((k + 1).min(1 << 24) as usize);
    let mut rates = Vec::with_capacity(logs.capacity());
    for l in n..=last {
        let x = schedule.rate(l) * mu;
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::Domain(format!(
                "rho_{l} mu = {x} must lie in (0, 1)"
            )));
        }
        logs.push((-x).ln_1p());
        rates.push(x);
    }
    let log_product = neumaier_sum(logs);
    let log_majorant = -neumaier_sum(rates);
    Ok(ProductDecay {
        product: log_product.exp(),
        majorant: log_majorant.exp(),
        log_product,
        log_majorant,
    })
}

/// Closed form of the product where one is known: `(1 − ρμ)^{k+1}` for a
/// constant rate and `(c2 + n − 1)/(c2 + n + k)` for `c1 μ = 1`.
pub fn product_closed_form(schedule: &Schedule, mu: f64, n: u64, k: u64) -> Option<f64> {
    match *schedule {
        Schedule::Constant { rho } => Some((1.0 - rho * mu).powf(k as f64 + 1.0)),
        Schedule::InverseTime { c1, c2 } if c1 * mu == 1.0 => {
            Some((c2 + n as f64 - 1.0) / (c2 + n as f64 + k as f64))
        }
        _ => None,
    }
}

/// Monte Carlo check of `E_ω⟨X − X*, ∇L(ω, X)⟩ ≥ (μ/2)‖X − X*‖²` at one
/// point, cross-checked against the closed form `⟨X − X*, ∇𝓛(X)⟩`.
pub fn check_descent_inequality<R: Rng + ?Sized>(
    problem: &StochasticProblem,
    cert: &HypothesisCertificate,
    x: &ParameterVector,
    samples: usize,
    rng: &mut R,
) -> Result<Verdict> {
    if samples < 100 {
        return Err(Error::usage(format!("need at least 100 inner samples, got {samples}")));
    }
    if x.len() != problem.dimension() {
        return Err(Error::Dimension {
            expected: problem.dimension(),
            actual: x.len(),
        });
    }
    if !cert.contains(x.as_slice()) {
        return Err(Error::usage("point lies outside the certified region"));
    }
    let star = problem.minimizer().as_slice();
    let delta: Vec<f64> = x.as_slice().iter().zip(star).map(|(a, b)| a - b).collect();
    let mut grad = vec![0.0; x.len()];
    let mut values = Vec::with_capacity(samples);
    for _ in 0..samples {
        let omega = problem.sample_noise(rng);
        problem.gradient_into(&omega, x.as_slice(), &mut grad)?;
        values.push(dot(&delta, &grad));
    }
    let (estimate, se) = mean_and_stderr(&mut values);
    let closed = dot(&delta, problem.mean_gradient(x)?.as_slice());
    let required = 0.5 * cert.mu * sq_dist(x.as_slice(), star);

    let descent_slack = estimate - required + CHECKPOINT_Z * se;
    let round_off = 1e-12 * (1.0 + closed.abs());
    let cross_slack = CROSS_CHECK_Z * se + round_off - (estimate - closed).abs();
    let context = format!(
        "estimate {estimate:.6e} (se {se:.3e}), closed form {closed:.6e}, required {required:.6e}"
    );
    let mut verdict = Verdict::from_slacks([(0, descent_slack), (1, cross_slack)], context);
    verdict.checked = 1;
    verdict.violations = verdict.violations.min(1);
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::SeededGenerator;

    fn pv(v: &[f64]) -> ParameterVector {
        ParameterVector::new(v.to_vec()).unwrap()
    }

    fn trajectory(sq: Vec<f64>) -> Trajectory {
        let n = sq.len();
        Trajectory {
            seed: 0,
            steps: n - 1,
            sq_dist: sq,
            in_region: vec![true; n],
            final_x: pv(&[0.0]),
        }
    }

    fn cert(mu: f64, b: f64) -> HypothesisCertificate {
        HypothesisCertificate {
            mu,
            gradient_bound: b,
            region_center: pv(&[0.0]),
            region_radius: 10.0,
            guaranteed_containment: true,
            provenance: vec![],
        }
    }

    fn series(mean: Vec<f64>, stderr: Vec<f64>) -> DnSeries {
        let n = mean.len();
        DnSeries {
            replications: 10,
            mean,
            stderr,
            in_region_fraction: vec![1.0; n],
        }
    }

    #[test]
    fn estimate_dn_examples() {
        let ts: Vec<_> = (0..10).map(|_| trajectory(vec![0.3; 6])).collect();
        let dn = estimate_dn(&ts).unwrap();
        assert_eq!(dn.mean, vec![0.3; 6]);
        assert_eq!(dn.stderr, vec![0.0; 6]);

        let mut a = vec![1.0; 6];
        let mut b = vec![1.0; 6];
        a[5] = 0.0;
        b[5] = 2.0;
        let dn = estimate_dn(&[trajectory(a), trajectory(b)]).unwrap();
        assert_eq!(dn.mean[5], 1.0);
        assert!((dn.stderr[5] - 1.0).abs() < 1e-15);

        assert!(matches!(estimate_dn(&[trajectory(vec![1.0; 3])]), Err(Error::Usage(_))));
        assert!(matches!(
            estimate_dn(&[trajectory(vec![1.0; 3]), trajectory(vec![1.0; 4])]),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn bound_sequence_examples() {
        let b = bound_sequence(1.0, &Schedule::constant(0.1).unwrap(), &cert(1.0, 1.0), 2).unwrap();
        assert!((b.b[1] - 0.91).abs() < 1e-15);
        assert!((b.b[2] - 0.829).abs() < 1e-15);

        let b = bound_sequence(1.0, &Schedule::constant(0.5).unwrap(), &cert(1.0, 0.0), 20).unwrap();
        for (n, v) in b.b.iter().enumerate() {
            assert_eq!(*v, 0.5_f64.powi(n as i32));
        }
    }

    #[test]
    fn bound_sequence_fixed_point() {
        let c = cert(2.0, 4.0);
        let rho = 0.01;
        let theta = neighborhood_level(rho, &c);
        assert!((theta - 0.02).abs() < 1e-17);
        let b = bound_sequence(theta, &Schedule::constant(rho).unwrap(), &c, 1000).unwrap();
        for w in b.b.windows(2) {
            assert!(((w[1] - w[0]) / w[0]).abs() <= 1e-15);
        }
    }

    #[test]
    fn recurrence_examples() {
        let b = BoundSequence { b: vec![1.0, 0.9, 0.8] };
        let v = check_recurrence(&series(vec![1.0, 0.9, 0.8], vec![0.0; 3]), &b, 3.0).unwrap();
        assert!(v.pass);
        assert_eq!(v.first_violation_index, None);

        let v = check_recurrence(&series(vec![1.0, 0.9 + 10.0 * 0.01, 0.8], vec![0.0, 0.01, 0.0]), &b, 3.0).unwrap();
        assert!(!v.pass);
        assert_eq!(v.first_violation_index, Some(1));
        assert!(v.worst_margin < 0.0);
    }

    #[test]
    fn recurrence_excludes_region_exits() {
        let b = BoundSequence { b: vec![1.0, 0.5, 0.25] };
        let mut dn = series(vec![1.0, 5.0, 0.2], vec![0.0; 3]);
        dn.in_region_fraction[1] = 0.9;
        let v = check_recurrence(&dn, &b, 3.0).unwrap();
        assert!(v.pass);
        assert_eq!(v.checked, 2);
        assert!(v.context.contains("excluded"));
    }

    #[test]
    fn recurrence_holds_for_deterministic_run() {
        let (rho, mu) = (0.3_f64, 1.0_f64);
        let d: Vec<f64> = (0..50).map(|n| (1.0 - rho * mu).powi(2 * n)).collect();
        let b = bound_sequence(1.0, &Schedule::constant(rho).unwrap(), &cert(mu, 0.0), 49).unwrap();
        assert!(check_recurrence(&series(d, vec![0.0; 50]), &b, 0.0).unwrap().pass);
    }

    #[test]
    fn neighborhood_examples() {
        let c = cert(2.0, 4.0);
        let s = Schedule::constant(0.01).unwrap();
        let theta = neighborhood_level(0.01, &c);

        let mean: Vec<f64> = (0..200).map(|n| theta * 0.9 * 0.99_f64.powi(n)).collect();
        for window in [1, 10, 200] {
            assert!(check_neighborhood(&series(mean.clone(), vec![0.0; 200]), &c, &s, window, 0.0).unwrap().pass);
        }

        let v = check_neighborhood(&series(vec![2.0 * theta; 200], vec![1e-9; 200]), &c, &s, 50, 0.2).unwrap();
        assert!(!v.pass);
        assert_eq!(v.first_violation_index, Some(150));

        let inv = Schedule::inverse_time(1.0, 1.0).unwrap();
        assert!(matches!(check_neighborhood(&series(mean, vec![0.0; 200]), &c, &inv, 10, 0.2), Err(Error::Usage(_))));
    }

    #[test]
    fn convergence_examples() {
        let dn = series(vec![0.0; 11], vec![0.0; 11]);
        assert!(check_convergence(&dn, &[]).unwrap().pass);
        assert!(check_convergence(&dn, &[(5, 1e-9), (10, 1e-12)]).unwrap().pass);
        assert!(matches!(check_convergence(&dn, &[(11, 1.0)]), Err(Error::Usage(_))));
        assert!(matches!(check_convergence(&dn, &[(5, 1.0), (2, 1.0)]), Err(Error::Usage(_))));

        let dn = series(vec![1.0, 0.5, 0.4], vec![0.0, 0.01, 0.01]);
        let v = check_convergence(&dn, &[(1, 0.6), (2, 0.3)]).unwrap();
        assert_eq!(v.first_violation_index, Some(2));
    }

    #[test]
    fn product_decay_examples() {
        let s = Schedule::inverse_time(1.0, 1.0).unwrap();
        let p = product_decay(&s, 1.0, 1, 8).unwrap();
        assert!((p.product - 0.1).abs() < 1e-15);
        assert!(p.product <= p.majorant);

        let c = Schedule::constant(0.5).unwrap();
        let p = product_decay(&c, 1.0, 0, 9).unwrap();
        assert!((p.product - 0.5_f64.powi(10)).abs() / 0.5_f64.powi(10) < 1e-14);

        let bad = Schedule::constant(1.5).unwrap();
        assert!(matches!(product_decay(&bad, 1.0, 0, 3), Err(Error::Domain(_))));
        // rho_0 mu = 1 makes the first factor zero, which is outside the domain.
        assert!(matches!(product_decay(&s, 1.0, 0, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn descent_examples() {
        let p = StochasticProblem::shifted_quadratic(2.0, pv(&[1.0, 1.0]), 0.5).unwrap();
        let c = p.certify_constants(2.0, &pv(&[1.0, 1.0])).unwrap();
        let mut rng = SeededGenerator::new(4);

        let v = check_descent_inequality(&p, &c, &pv(&[1.0, 1.0]), 100, &mut rng).unwrap();
        assert!(v.pass, "{v:?}");

        let v = check_descent_inequality(&p, &c, &pv(&[2.0, 0.5]), 5000, &mut rng).unwrap();
        assert!(v.pass, "{v:?}");

        assert!(matches!(check_descent_inequality(&p, &c, &pv(&[1.0, 1.0]), 99, &mut rng), Err(Error::Usage(_))));
        assert!(matches!(check_descent_inequality(&p, &c, &pv(&[9.0, 1.0]), 100, &mut rng), Err(Error::Usage(_))));
    }

    #[test]
    fn descent_detects_inflated_mu() {
        // With r = 0 the estimate is exact: mu_q |d|^2 = 2 |d|^2 versus required 3 |d|^2.
        let p = StochasticProblem::shifted_quadratic(2.0, pv(&[0.0]), 0.0).unwrap();
        let c = p.certify_constants(2.0, &pv(&[0.0])).unwrap().with_mu(6.0);
        let mut rng = SeededGenerator::new(1);
        let v = check_descent_inequality(&p, &c, &pv(&[1.0]), 100, &mut rng).unwrap();
        assert!(!v.pass);
        assert_eq!(v.first_violation_index, Some(0));
    }
}
