//! Experiment configuration, CSV/report rendering and the `run`, `verify` and
//! `lemma` commands.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 configuration or
//! domain error, 3 a trajectory diverged.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analyzer::{
    self, bound_sequence, check_convergence, check_descent_inequality, check_neighborhood, check_recurrence,
    estimate_dn, product_closed_form, product_decay, BoundSequence, DnSeries, Verdict,
};
use crate::engine::{derive_seed, run_replications, SeededGenerator};
use crate::error::{Error, Result};
use crate::objective::{
    audit_certificate, check_gradients, sample_in_ball, AuditReport, GradientCheckReport, HypothesisCertificate,
    ParameterVector, StochasticProblem,
};
use crate::schedule::{self, Schedule, ScheduleReport};

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "SGD_VERIFY_OUTPUT_DIR";

pub const CSV_HEADER: &str = "n,rho_n,d_hat,stderr,bound_b_n,in_region_fraction";
pub const CSV_FILE: &str = "series.csv";
pub const REPORT_FILE: &str = "report.txt";

/// Relative agreement required between the product and its closed form.
pub const LEMMA_TOLERANCE: f64 = 1e-12;

pub const DEFAULT_AUDIT_SAMPLES: usize = 100_000;
pub const DEFAULT_GRADIENT_POINTS: usize = 1000;

// Offsets separating auxiliary random streams from replication seeds.
const AUDIT_STREAM: u64 = 0xA0D1_7000_0000_0001;
const GRADIENT_STREAM: u64 = 0x6AAD_0000_0000_0002;
const DESCENT_STREAM: u64 = 0xDE5C_E000_0000_0003;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    ShiftedQuadratic { mu_q: f64, m: Vec<f64>, r: f64 },
    FiniteSumLeastSquares { rows: Vec<Vec<f64>>, targets: Vec<f64> },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<StochasticProblem> {
        match self {
            ProblemSpec::ShiftedQuadratic { mu_q, m, r } => {
                let center = ParameterVector::new(m.clone()).map_err(|e| Error::config("problem.m", e.to_string()))?;
                StochasticProblem::shifted_quadratic(*mu_q, center, *r)
            }
            ProblemSpec::FiniteSumLeastSquares { rows, targets } => {
                StochasticProblem::finite_sum(rows.clone(), targets.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Constant { rho: f64 },
    InverseTime { c1: f64, c2: f64 },
}

impl ScheduleSpec {
    pub fn build(&self) -> Result<Schedule> {
        match *self {
            ScheduleSpec::Constant { rho } => Schedule::constant(rho),
            ScheduleSpec::InverseTime { c1, c2 } => Schedule::inverse_time(c1, c2),
        }
    }
}

/// A convergence checkpoint: an absolute threshold or a fraction of `d_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fraction_of_d0: Option<f64>,
}

impl Checkpoint {
    fn resolve(&self, d0: f64) -> Result<(usize, f64)> {
        let key = "checks.convergence.checkpoints";
        let value = match (self.threshold, self.fraction_of_d0) {
            (Some(t), None) => t,
            (None, Some(f)) => f * d0,
            _ => {
                return Err(Error::config(
                    key,
                    format!("checkpoint {} needs exactly one of threshold, fraction_of_d0", self.n),
                ))
            }
        };
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::config(key, format!("threshold at {} must be finite and >= 0", self.n)));
        }
        Ok((self.n, value))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    Recurrence {
        #[serde(default = "default_z")]
        z: f64,
    },
    Neighborhood {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<usize>,
        #[serde(default = "default_tol_rel")]
        tol_rel: f64,
    },
    Convergence { checkpoints: Vec<Checkpoint> },
    Descent { points: usize, inner_samples: usize },
    Lemma { n: u64, k: u64 },
}

fn default_z() -> f64 {
    analyzer::DEFAULT_Z
}

fn default_tol_rel() -> f64 {
    analyzer::DEFAULT_NEIGHBORHOOD_TOL
}

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CheckSpec::Recurrence { .. } => "recurrence",
            CheckSpec::Neighborhood { .. } => "neighborhood",
            CheckSpec::Convergence { .. } => "convergence",
            CheckSpec::Descent { .. } => "descent",
            CheckSpec::Lemma { .. } => "lemma",
        }
    }
}

/// Declared hypothesis constants that replace the certified ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub gradient_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default = "default_audit_samples")]
    pub audit_samples: usize,
    #[serde(default = "default_gradient_points")]
    pub gradient_points: usize,
}

fn default_audit_samples() -> usize {
    DEFAULT_AUDIT_SAMPLES
}

fn default_gradient_points() -> usize {
    DEFAULT_GRADIENT_POINTS
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            audit_samples: DEFAULT_AUDIT_SAMPLES,
            gradient_points: DEFAULT_GRADIENT_POINTS,
        }
    }
}

/// One experiment, as read from a JSON document. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub schedule: ScheduleSpec,
    #[serde(rename = "X0")]
    pub x0: Vec<f64>,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(rename = "M")]
    pub replications: usize,
    pub master_seed: u64,
    #[serde(rename = "R_op")]
    pub region_radius: f64,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateOverride>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySpec>,
    /// Run even when `sup_n ρ_n μ > 1`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub force: bool,
    pub output: PathBuf,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(offending_key(&e.to_string()), e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Validates the document and builds the objects it describes.
    pub fn prepare(&self) -> Result<Experiment> {
        if self.horizon < 1 {
            return Err(Error::config("T", "horizon must be at least 1"));
        }
        if self.replications < 2 {
            return Err(Error::config("M", format!("need at least 2 replications, got {}", self.replications)));
        }
        let problem = self.problem.build()?;
        let schedule = self.schedule.build()?;
        let x0 = ParameterVector::new(self.x0.clone()).map_err(|e| Error::config("X0", e.to_string()))?;
        if x0.len() != problem.dimension() {
            return Err(Error::config(
                "X0",
                format!("length {} does not match problem dimension {}", x0.len(), problem.dimension()),
            ));
        }
        let mut cert = problem.certify_constants(self.region_radius, &x0).map_err(|e| match e {
            Error::Certification(msg) if msg.contains("operating radius") => Error::config("R_op", msg),
            other => other,
        })?;
        if let Some(o) = &self.certificate {
            if let Some(mu) = o.mu {
                if !(mu.is_finite() && mu > 0.0) {
                    return Err(Error::config("certificate.mu", "must be finite and > 0"));
                }
                cert = cert.with_mu(mu);
            }
            if let Some(b) = o.gradient_bound {
                if !(b.is_finite() && b >= 0.0) {
                    return Err(Error::config("certificate.B", "must be finite and >= 0"));
                }
                cert = cert.with_gradient_bound(b);
            }
        }
        let schedule_report = schedule::validate(&schedule, cert.mu)?;
        if schedule_report.max_rho_mu > 1.0 && !self.force {
            return Err(Error::config(
                "schedule",
                format!(
                    "sup rho_n mu = {} exceeds 1; set \"force\": true to run anyway",
                    schedule_report.max_rho_mu
                ),
            ));
        }
        if let Some(v) = &self.verify {
            if v.audit_samples == 0 {
                return Err(Error::config("verify.audit_samples", "must be at least 1"));
            }
            if v.gradient_points == 0 {
                return Err(Error::config("verify.gradient_points", "must be at least 1"));
            }
        }
        let d0 = x0.sq_dist(problem.minimizer())?;
        for check in &self.checks {
            self.validate_check(check, &schedule, &cert, d0)?;
        }
        Ok(Experiment {
            config: self.clone(),
            problem,
            schedule,
            x0,
            cert,
            schedule_report,
        })
    }

    fn validate_check(&self, check: &CheckSpec, schedule: &Schedule, cert: &HypothesisCertificate, d0: f64) -> Result<()> {
        match check {
            CheckSpec::Recurrence { z } => {
                if !(*z >= 0.0) {
                    return Err(Error::config("checks.recurrence.z", "must be >= 0"));
                }
            }
            CheckSpec::Neighborhood { window, tol_rel } => {
                let Schedule::Constant { rho } = *schedule else {
                    return Err(Error::config("checks.neighborhood", "requires a constant schedule"));
                };
                if rho * cert.mu >= 1.0 {
                    return Err(Error::config("checks.neighborhood", "requires rho mu < 1"));
                }
                let w = window.unwrap_or_else(|| analyzer::default_window(self.horizon));
                if w == 0 || w > self.horizon + 1 {
                    return Err(Error::config("checks.neighborhood.window", format!("must be in [1, {}]", self.horizon + 1)));
                }
                if !(*tol_rel >= 0.0) {
                    return Err(Error::config("checks.neighborhood.tol_rel", "must be >= 0"));
                }
            }
            CheckSpec::Convergence { checkpoints } => {
                let mut last = 0;
                for c in checkpoints {
                    let (n, _) = c.resolve(d0)?;
                    if n > self.horizon {
                        return Err(Error::config(
                            "checks.convergence.checkpoints",
                            format!("checkpoint {n} lies beyond T = {}", self.horizon),
                        ));
                    }
                    if n < last {
                        return Err(Error::config("checks.convergence.checkpoints", "must be sorted by n"));
                    }
                    last = n;
                }
            }
            CheckSpec::Descent { points, inner_samples } => {
                if *points == 0 {
                    return Err(Error::config("checks.descent.points", "must be at least 1"));
                }
                if *inner_samples < 100 {
                    return Err(Error::config("checks.descent.inner_samples", "must be at least 100"));
                }
            }
            CheckSpec::Lemma { n, k } => {
                product_decay(schedule, cert.mu, *n, *k).map_err(|e| Error::config("checks.lemma", e.to_string()))?;
            }
        }
        Ok(())
    }
}

/// Best-effort extraction of the key a serde error refers to.
fn offending_key(message: &str) -> String {
    for marker in ["missing field `", "unknown field `", "duplicate field `"] {
        if let Some(start) = message.find(marker) {
            let rest = &message[start + marker.len()..];
            if let Some(end) = rest.find('`') {
                return rest[..end].to_string();
            }
        }
    }
    "config".to_string()
}

/// A validated configuration with its problem, schedule and certificate.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub problem: StochasticProblem,
    pub schedule: Schedule,
    pub x0: ParameterVector,
    pub cert: HypothesisCertificate,
    pub schedule_report: ScheduleReport,
}

/// Everything produced by one `run`.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub series: DnSeries,
    pub bound: BoundSequence,
    pub verdicts: Vec<(String, Verdict)>,
    pub csv: String,
    pub report: String,
}

impl RunOutcome {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|(_, v)| v.pass)
    }
}

impl Experiment {
    /// Runs all replications, estimates `d_n`, evaluates the configured checks
    /// and renders the CSV and report.
    pub fn run(&self) -> Result<RunOutcome> {
        let cfg = &self.config;
        let trajectories = run_replications(
            &self.problem,
            &self.schedule,
            &self.cert,
            &self.x0,
            cfg.horizon,
            cfg.master_seed,
            cfg.replications,
        )?;
        let series = estimate_dn(&trajectories)?;
        drop(trajectories);
        let d0 = self.x0.sq_dist(self.problem.minimizer())?;
        let bound = bound_sequence(d0, &self.schedule, &self.cert, cfg.horizon)?;

        let mut verdicts = Vec::new();
        for check in &cfg.checks {
            let verdict = match check {
                CheckSpec::Recurrence { z } => check_recurrence(&series, &bound, *z)?,
                CheckSpec::Neighborhood { window, tol_rel } => {
                    let w = window.unwrap_or_else(|| analyzer::default_window(cfg.horizon));
                    check_neighborhood(&series, &self.cert, &self.schedule, w, *tol_rel)?
                }
                CheckSpec::Convergence { checkpoints } => {
                    let resolved = checkpoints.iter().map(|c| c.resolve(d0)).collect::<Result<Vec<_>>>()?;
                    check_convergence(&series, &resolved)?
                }
                CheckSpec::Descent { points, inner_samples } => self.descent_verdict(*points, *inner_samples)?,
                CheckSpec::Lemma { n, k } => lemma_verdict(&self.schedule, self.cert.mu, *n, *k)?,
            };
            verdicts.push((check.name().to_string(), verdict));
        }

        let csv = render_csv(&self.schedule, &series, &bound);
        let mut outcome = RunOutcome {
            series,
            bound,
            verdicts,
            csv,
            report: String::new(),
        };
        outcome.report = self.render_report(&outcome);
        Ok(outcome)
    }

    fn descent_verdict(&self, points: usize, inner: usize) -> Result<Verdict> {
        let mut rng = SeededGenerator::new(derive_seed(self.config.master_seed ^ DESCENT_STREAM, 0));
        let center = self.cert.region_center.as_slice();
        let mut failed = Vec::new();
        let mut worst = f64::INFINITY;
        for i in 0..points {
            let x = ParameterVector::new(sample_in_ball(center, self.cert.region_radius, &mut rng))?;
            let v = check_descent_inequality(&self.problem, &self.cert, &x, inner, &mut rng)?;
            worst = worst.min(v.worst_margin);
            if !v.pass {
                failed.push(i);
            }
        }
        Ok(Verdict {
            pass: failed.is_empty(),
            first_violation_index: failed.first().copied(),
            worst_margin: worst,
            checked: points,
            violations: failed.len(),
            context: format!("{points} random point(s) in the region, {inner} inner samples each"),
        })
    }

    /// Runs the certificate audit and the finite-difference gradient check.
    pub fn verify(&self) -> Result<(AuditReport, GradientCheckReport)> {
        let spec = self.config.verify.clone().unwrap_or_default();
        let seed = self.config.master_seed;
        let mut rng = SeededGenerator::new(derive_seed(seed ^ AUDIT_STREAM, 0));
        let audit = audit_certificate(&self.problem, &self.cert, spec.audit_samples, &mut rng)?;
        let mut rng = SeededGenerator::new(derive_seed(seed ^ GRADIENT_STREAM, 0));
        let gradients = check_gradients(&self.problem, spec.gradient_points, &mut rng)?;
        Ok((audit, gradients))
    }

    fn render_report(&self, outcome: &RunOutcome) -> String {
        let cfg = &self.config;
        let mut out = String::new();
        let _ = writeln!(out, "sgd-verify run report");
        let _ = writeln!(out, "problem: {} (N = {})", self.problem.family_name(), self.problem.dimension());
        let _ = writeln!(out, "schedule: {}", self.schedule.describe());
        let _ = writeln!(out, "horizon T = {}, replications M = {}, master_seed = {}", cfg.horizon, cfg.replications, cfg.master_seed);
        write_certificate(&mut out, &self.cert);
        let r = &self.schedule_report;
        let _ = writeln!(
            out,
            "schedule report: tends_to_zero = {}, sum_diverges = {}, step_conditions_hold = {}, max_rho_mu = {:.16e}, stability_ok = {}",
            tri(r.tends_to_zero),
            tri(r.sum_diverges),
            tri(r.step_conditions_hold),
            r.max_rho_mu,
            r.stability_ok
        );
        let _ = writeln!(out, "d_0 = {:.16e}", outcome.series.mean[0]);
        if let Schedule::Constant { rho } = self.schedule {
            let _ = writeln!(out, "neighborhood level rho B / mu = {:.16e}", analyzer::neighborhood_level(rho, &self.cert));
        }
        for (name, v) in &outcome.verdicts {
            write_verdict(&mut out, name, v);
        }
        let _ = writeln!(out, "overall: {}", if outcome.all_pass() { "PASS" } else { "FAIL" });
        out
    }
}

fn tri(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "true",
        Some(false) => "false",
        None => "unknown",
    }
}

fn write_certificate(out: &mut String, cert: &HypothesisCertificate) {
    let _ = writeln!(
        out,
        "certificate: mu = {:.16e}, B = {:.16e}, R_op = {:.16e}, guaranteed_containment = {}",
        cert.mu, cert.gradient_bound, cert.region_radius, cert.guaranteed_containment
    );
    for line in &cert.provenance {
        let _ = writeln!(out, "  {line}");
    }
}

fn write_verdict(out: &mut String, name: &str, v: &Verdict) {
    let _ = writeln!(
        out,
        "check {name}: {} (checked {}, violations {}, worst margin {:.6e}{}) {}",
        if v.pass { "PASS" } else { "FAIL" },
        v.checked,
        v.violations,
        v.worst_margin,
        v.first_violation_index
            .map(|i| format!(", first violation at {i}"))
            .unwrap_or_default(),
        v.context
    );
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Renders the series with one row per `n ∈ [0, T]`, 17 significant digits.
pub fn render_csv(schedule: &Schedule, series: &DnSeries, bound: &BoundSequence) -> String {
    let mut out = String::with_capacity(series.mean.len() * 128);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for n in 0..series.mean.len() {
        let _ = writeln!(
            out,
            "{n},{},{},{},{},{}",
            fmt17(schedule.rate(n as u64)),
            fmt17(series.mean[n]),
            fmt17(series.stderr[n]),
            fmt17(bound.b[n]),
            fmt17(series.in_region_fraction[n])
        );
    }
    out
}

fn lemma_verdict(schedule: &Schedule, mu: f64, n: u64, k: u64) -> Result<Verdict> {
    let p = product_decay(schedule, mu, n, k)?;
    let oracle = product_closed_form(schedule, mu, n, k);
    let mut slacks = vec![(0, p.log_majorant - p.log_product)];
    if let Some(exact) = oracle {
        slacks.push((1, LEMMA_TOLERANCE - relative_error(p.product, exact)));
    }
    let mut context = format!("product {:.16e}, majorant {:.16e}", p.product, p.majorant);
    if let Some(exact) = oracle {
        let _ = write!(context, ", closed form {exact:.16e}");
    }
    let mut first = None;
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for (i, s) in &slacks {
        worst = worst.min(*s);
        if !(*s >= 0.0) {
            violations += 1;
            first.get_or_insert(*i);
        }
    }
    Ok(Verdict {
        pass: first.is_none(),
        first_violation_index: first,
        worst_margin: worst,
        checked: slacks.len(),
        violations,
        context,
    })
}

fn relative_error(value: f64, exact: f64) -> f64 {
    if exact == 0.0 {
        value.abs()
    } else {
        ((value - exact) / exact).abs()
    }
}

/// Process exit status of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass = 0,
    CheckFailed = 1,
    ConfigError = 2,
    Divergence = 3,
}

impl Status {
    pub fn code(self) -> u8 {
        self as u8
    }

    fn from_error(e: &Error) -> Self {
        match e {
            Error::Divergence { .. } | Error::NonFinite => Status::Divergence,
            _ => Status::ConfigError,
        }
    }
}

/// Status plus the text to show the user.
#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub status: Status,
    pub message: String,
}

impl CommandOutput {
    fn failure(e: Error) -> Self {
        CommandOutput {
            status: Status::from_error(&e),
            message: format!("error: {e}"),
        }
    }
}

/// `run <config>`: executes the experiment and writes `series.csv` and
/// `report.txt` to the configured output directory (or `output_override`).
pub fn cmd_run(config_path: &Path, output_override: Option<&Path>) -> CommandOutput {
    let experiment = match ExperimentConfig::load(config_path).and_then(|c| c.prepare()) {
        Ok(e) => e,
        Err(e) => return CommandOutput::failure(e),
    };
    let outcome = match experiment.run() {
        Ok(o) => o,
        Err(e) => return CommandOutput::failure(e),
    };
    let dir = output_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| experiment.config.output.clone());
    let write = fs::create_dir_all(&dir)
        .and_then(|_| fs::write(dir.join(CSV_FILE), &outcome.csv))
        .and_then(|_| fs::write(dir.join(REPORT_FILE), &outcome.report));
    if let Err(e) = write {
        return CommandOutput::failure(Error::config("output", format!("cannot write to {}: {e}", dir.display())));
    }
    CommandOutput {
        status: if outcome.all_pass() { Status::Pass } else { Status::CheckFailed },
        message: format!("{}wrote {}", outcome.report, dir.join(CSV_FILE).display()),
    }
}

/// `verify <config>`: certificate audit and gradient check, no SGD run.
pub fn cmd_verify(config_path: &Path) -> CommandOutput {
    let result = ExperimentConfig::load(config_path)
        .and_then(|c| c.prepare())
        .and_then(|e| e.verify().map(|r| (e, r)));
    let (experiment, (audit, gradients)) = match result {
        Ok(r) => r,
        Err(e) => return CommandOutput::failure(e),
    };
    let mut out = String::new();
    let _ = writeln!(out, "sgd-verify certificate audit");
    let _ = writeln!(out, "problem: {} (N = {})", experiment.problem.family_name(), experiment.problem.dimension());
    write_certificate(&mut out, &experiment.cert);
    let _ = writeln!(
        out,
        "gradient bound: {} ({} samples, max |grad L|^2 / B = {:.16e}, violations {})",
        if audit.gradient_violations == 0 { "PASS" } else { "FAIL" },
        audit.samples,
        audit.max_gradient_ratio,
        audit.gradient_violations
    );
    if let Some((omega, x)) = &audit.gradient_witness {
        let _ = writeln!(out, "  witness: omega = {omega:?}, X = {:?}", x.as_slice());
    }
    let _ = writeln!(
        out,
        "strong convexity: {} (min relative slack {:.16e}, violations {})",
        if audit.convexity_violations == 0 { "PASS" } else { "FAIL" },
        audit.min_convexity_slack,
        audit.convexity_violations
    );
    if let Some((x, y)) = &audit.convexity_witness {
        let _ = writeln!(out, "  witness: X = {:?}, Y = {:?}", x.as_slice(), y.as_slice());
    }
    let _ = writeln!(
        out,
        "finite-difference gradients: {} ({} points, max relative error {:.6e})",
        if gradients.pass { "PASS" } else { "FAIL" },
        gradients.points,
        gradients.max_relative_error
    );
    let pass = audit.pass && gradients.pass;
    let _ = writeln!(out, "overall: {}", if pass { "PASS" } else { "FAIL" });
    CommandOutput {
        status: if pass { Status::Pass } else { Status::CheckFailed },
        message: out,
    }
}

/// `lemma`: evaluates `∏_{ℓ=n}^{n+k} (1 − ρ_ℓ μ)` against its majorant and
/// closed form.
pub fn cmd_lemma(schedule: &ScheduleSpec, mu: f64, n: u64, k: u64) -> CommandOutput {
    let schedule = match schedule.build() {
        Ok(s) => s,
        Err(e) => return CommandOutput::failure(e),
    };
    let verdict = match lemma_verdict(&schedule, mu, n, k) {
        Ok(v) => v,
        Err(e) => return CommandOutput::failure(e),
    };
    let p = product_decay(&schedule, mu, n, k).expect("validated above");
    let mut out = String::new();
    let _ = writeln!(out, "schedule: {}, mu = {mu}, l = {n}..={}", schedule.describe(), n + k);
    let _ = writeln!(out, "product: {}", fmt17(p.product));
    let _ = writeln!(out, "majorant exp(-mu sum rho): {}", fmt17(p.majorant));
    match product_closed_form(&schedule, mu, n, k) {
        Some(exact) => {
            let _ = writeln!(out, "closed form: {} (relative error {:.3e})", fmt17(exact), relative_error(p.product, exact));
        }
        None => {
            let _ = writeln!(out, "closed form: unavailable");
        }
    }
    let _ = writeln!(out, "result: {}", if verdict.pass { "PASS" } else { "FAIL" });
    CommandOutput {
        status: if verdict.pass { Status::Pass } else { Status::CheckFailed },
        message: out,
    }
}
