//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.
//!
//! Run with `cargo test -p sgd-verify --test acceptance`.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use sgd_verify::analyzer::{
    bound_sequence, check_convergence, check_descent_inequality, check_neighborhood, check_recurrence, estimate_dn,
    neighborhood_level, product_decay,
};
use sgd_verify::cli::{ExperimentConfig, CSV_FILE, OUTPUT_DIR_ENV};
use sgd_verify::engine::{run_replications, SeededGenerator, Sgd};
use sgd_verify::objective::{audit_certificate, check_gradients, sample_in_ball};
use sgd_verify::presets::{reference_least_squares, reference_quadratic, Setup};
use sgd_verify::schedule::Schedule;
use sgd_verify::{HypothesisCertificate, ParameterVector};

const MASTER_SEED: u64 = 20_240_601;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn certified(setup: &Setup) -> HypothesisCertificate {
    setup
        .problem
        .certify_constants(setup.region_radius, &setup.x0)
        .expect("reference setups certify")
}

/// 1. Recurrence envelope under a constant rate.
fn recurrence_envelope() -> Outcome {
    let setup = reference_quadratic();
    let cert = certified(&setup);
    let schedule = Schedule::constant(0.05).unwrap();
    let (t, m) = (500, 1000);
    let start = Instant::now();
    let trajectories = run_replications(&setup.problem, &schedule, &cert, &setup.x0, t, MASTER_SEED, m).unwrap();
    let dn = estimate_dn(&trajectories).unwrap();
    let d0 = setup.x0.sq_dist(setup.problem.minimizer()).unwrap();
    let bound = bound_sequence(d0, &schedule, &cert, t).unwrap();
    let at3 = check_recurrence(&dn, &bound, 3.0).unwrap();
    let at5 = check_recurrence(&dn, &bound, 5.0).unwrap();
    let elapsed = start.elapsed().as_secs_f64();

    let coverage = 1.0 - at3.violations as f64 / at3.checked as f64;
    let pass = at3.checked == t + 1 && coverage >= 0.99 && at5.pass && elapsed < 10.0;
    outcome(
        pass,
        format!(
            "{} of {} steps within b_n + 3se ({:.2}%), 5se violations {}, runtime {elapsed:.2}s",
            at3.checked - at3.violations,
            at3.checked,
            100.0 * coverage,
            at5.violations
        ),
    )
}

/// 2. Constant-rate neighborhood and the envelope's fixed point.
fn constant_rate_neighborhood() -> Outcome {
    let setup = reference_quadratic();
    let cert = certified(&setup);
    let rho = 0.01;
    let schedule = Schedule::constant(rho).unwrap();
    let trajectories = run_replications(&setup.problem, &schedule, &cert, &setup.x0, 5000, MASTER_SEED, 500).unwrap();
    let dn = estimate_dn(&trajectories).unwrap();
    let verdict = check_neighborhood(&dn, &cert, &schedule, 500, 0.2).unwrap();

    let theta = neighborhood_level(rho, &cert);
    let fixed = bound_sequence(theta, &schedule, &cert, 10_000).unwrap();
    let drift = fixed.b.iter().map(|b| ((b - theta) / theta).abs()).fold(0.0, f64::max);

    outcome(
        verdict.pass && drift <= 1e-12,
        format!(
            "theta = rho B / mu = {theta:.6e}, tail max d_hat = {:.3e}, fixed-point drift {drift:.1e} over 10^4 steps",
            dn.mean[dn.mean.len() - 500..].iter().cloned().fold(0.0, f64::max)
        ),
    )
}

/// 3. Convergence under `ρ_n = 1/(1 + n)`.
fn decaying_schedule_convergence() -> Outcome {
    let setup = reference_quadratic();
    let cert = certified(&setup);
    let schedule = Schedule::inverse_time(1.0, 1.0).unwrap();
    let t = 10_000;
    let d0 = setup.x0.sq_dist(setup.problem.minimizer()).unwrap();
    let checkpoints = [(1000, 0.3 * d0), (10_000, 0.05 * d0)];

    // The thresholds must already be implied by the deterministic envelope.
    let bound = bound_sequence(d0, &schedule, &cert, t).unwrap();
    let envelope_ok = checkpoints.iter().all(|&(n, thr)| bound.b[n] <= thr);

    let trajectories = run_replications(&setup.problem, &schedule, &cert, &setup.x0, t, MASTER_SEED, 500).unwrap();
    let dn = estimate_dn(&trajectories).unwrap();
    let verdict = check_convergence(&dn, &checkpoints).unwrap();
    outcome(
        envelope_ok && verdict.pass,
        format!(
            "b_1000 = {:.3e} (<= {:.2}), b_10000 = {:.3e} (<= {:.2}); d_hat_1000 = {:.3e}, d_hat_10000 = {:.3e}",
            bound.b[1000], checkpoints[0].1, bound.b[10_000], checkpoints[1].1, dn.mean[1000], dn.mean[10_000]
        ),
    )
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Exact `∏_{ℓ=n}^{n+k} ℓ/(ℓ+1)` by multiplying reduced fractions.
fn telescoped(n: u64, k: u64) -> f64 {
    let (mut num, mut den) = (1u64, 1u64);
    for l in n..=n + k {
        num *= l;
        den *= l + 1;
        let g = gcd(num, den);
        num /= g;
        den /= g;
    }
    num as f64 / den as f64
}

/// 4. Product decay against the telescoped closed form and its majorant.
fn product_lemma() -> Outcome {
    let schedule = Schedule::inverse_time(1.0, 1.0).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for k in [10u64, 100, 10_000] {
        let p = product_decay(&schedule, 1.0, 1, k).unwrap();
        let exact = telescoped(1, k);
        let rel = ((p.product - exact) / exact).abs();
        pass &= rel <= 1e-12 && p.product <= p.majorant;
        parts.push(format!("k={k}: {:.6e} vs 1/(k+2) rel {rel:.1e}, majorant {:.3e}", p.product, p.majorant));
    }
    parts.push("the product over l = 1..=k+1 telescopes to 1/(k+2), not 2/(k+2)".into());
    outcome(pass, parts.join("; "))
}

/// 5. Noise-free run against `X_n = (1 − ρμ)^n X_0`.
fn deterministic_oracle() -> Outcome {
    let problem = sgd_verify::StochasticProblem::shifted_quadratic(1.0, ParameterVector::zeros(2), 0.0).unwrap();
    let schedule = Schedule::constant(0.5).unwrap();
    let x0 = ParameterVector::new(vec![2.0, -1.5]).unwrap();
    let mut sgd = Sgd::new(&problem, &schedule, &x0, MASTER_SEED).unwrap();
    let mut worst = 0.0_f64;
    for n in 0..=100 {
        if n > 0 {
            sgd.advance().unwrap();
        }
        let factor = 0.5_f64.powi(n);
        for (x, x0j) in sgd.iterate().iter().zip(x0.as_slice()) {
            let expected = factor * x0j;
            worst = worst.max(((x - expected) / expected).abs());
        }
    }
    outcome(worst <= 1e-10, format!("max relative error {worst:.1e} for n <= 100"))
}

/// 6. Certificate audits, clean and corrupted.
fn hypothesis_certificates() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, setup) in [reference_quadratic(), reference_least_squares()].iter().enumerate() {
        let cert = certified(setup);
        let name = setup.problem.family_name();
        let mut rng = SeededGenerator::new(MASTER_SEED + i as u64);
        let clean = audit_certificate(&setup.problem, &cert, 100_000, &mut rng).unwrap();
        let low_b = audit_certificate(&setup.problem, &cert.clone().with_gradient_bound(0.9 * cert.gradient_bound), 100_000, &mut rng).unwrap();
        let high_mu = audit_certificate(&setup.problem, &cert.clone().with_mu(1.1 * cert.mu), 100_000, &mut rng).unwrap();
        let low_mu = audit_certificate(&setup.problem, &cert.clone().with_mu(0.9 * cert.mu), 100_000, &mut rng).unwrap();
        let ok = clean.pass
            && clean.gradient_violations + clean.convexity_violations == 0
            && low_b.gradient_violations > 0
            && low_b.gradient_witness.is_some()
            && high_mu.convexity_violations > 0
            && high_mu.convexity_witness.is_some();
        pass &= ok;
        parts.push(format!(
            "{name}: clean violations {}/{}, B-10% flags {}, mu+10% flags {}, mu-10% flags {} (a smaller mu cannot violate)",
            clean.gradient_violations,
            clean.convexity_violations,
            low_b.gradient_violations,
            high_mu.convexity_violations,
            low_mu.convexity_violations
        ));
    }
    outcome(pass, parts.join("; "))
}

/// 7. Descent inequality at random in-region points.
fn descent_inequality() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, setup) in [reference_quadratic(), reference_least_squares()].iter().enumerate() {
        let cert = certified(setup);
        let mut rng = SeededGenerator::new(MASTER_SEED ^ (0xD0 + i as u64));
        let mut failures = 0;
        for _ in 0..50 {
            let x = ParameterVector::new(sample_in_ball(cert.region_center.as_slice(), cert.region_radius, &mut rng)).unwrap();
            if !check_descent_inequality(&setup.problem, &cert, &x, 10_000, &mut rng).unwrap().pass {
                failures += 1;
            }
        }
        pass &= failures == 0;
        parts.push(format!("{}: {failures}/50 failures", setup.problem.family_name()));
    }
    outcome(pass, parts.join("; "))
}

/// 8. Finite-difference gradient check.
fn gradient_correctness() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, setup) in [reference_quadratic(), reference_least_squares()].iter().enumerate() {
        let mut rng = SeededGenerator::new(MASTER_SEED + 100 + i as u64);
        let report = check_gradients(&setup.problem, 1000, &mut rng).unwrap();
        pass &= report.pass && report.max_relative_error <= 1e-6;
        parts.push(format!("{}: max rel error {:.1e}", setup.problem.family_name(), report.max_relative_error));
    }
    outcome(pass, parts.join("; "))
}

fn run_binary(config: &Path) -> (Option<i32>, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_sgd-verify"))
        .arg("run")
        .arg(config)
        .env_remove(OUTPUT_DIR_ENV)
        .output()
        .expect("binary runs");
    (out.status.code(), String::from_utf8_lossy(&out.stdout).into_owned())
}

/// 9. Byte-identical CSV for identical configs; seed changes alter values only.
fn reproducibility() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/quadratic_envelope.json");
    let mut config = ExperimentConfig::load(&shipped).unwrap();
    let mut csvs = Vec::new();
    let mut codes = Vec::new();
    for (name, seed) in [("a", MASTER_SEED), ("b", MASTER_SEED), ("c", MASTER_SEED + 1)] {
        config.master_seed = seed;
        config.output = tmp.path().join(name);
        let path = tmp.path().join(format!("{name}.json"));
        std::fs::write(&path, config.to_json()).unwrap();
        let (code, _) = run_binary(&path);
        codes.push(code);
        csvs.push(std::fs::read(config.output.join(CSV_FILE)).unwrap_or_default());
    }
    let identical = !csvs[0].is_empty() && csvs[0] == csvs[1];
    let d_hat = |csv: &[u8]| -> Vec<String> {
        String::from_utf8_lossy(csv)
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(2).unwrap_or_default().to_string())
            .collect()
    };
    let changed = d_hat(&csvs[0]) != d_hat(&csvs[2]);
    let all_pass = codes.iter().all(|c| *c == Some(0));
    outcome(
        identical && changed && all_pass,
        format!("same seed byte-identical: {identical}; new seed changes d_hat: {changed}; exit codes {codes:?}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 recurrence envelope", recurrence_envelope),
        ("2 constant-rate neighborhood", constant_rate_neighborhood),
        ("3 decaying-schedule convergence", decaying_schedule_convergence),
        ("4 product lemma", product_lemma),
        ("5 deterministic oracle", deterministic_oracle),
        ("6 hypothesis certificates", hypothesis_certificates),
        ("7 descent inequality", descent_inequality),
        ("8 gradient correctness", gradient_correctness),
        ("9 reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (name, criterion) in criteria {
        let o = criterion();
        if !o.pass {
            failed += 1;
        }
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
