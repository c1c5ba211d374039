//! Monte-Carlo estimate of `E‖X_n − X*‖²` against the deterministic envelope
//! `b_{n+1} = (1 − ρ_n μ) b_n + ρ_n² B` on the reference quadratic.

use sgd_verify::analyzer::{bound_sequence, check_recurrence, estimate_dn};
use sgd_verify::engine::run_replications;
use sgd_verify::presets::reference_quadratic;
use sgd_verify::Schedule;

fn main() -> sgd_verify::Result<()> {
    let setup = reference_quadratic();
    let cert = setup.problem.certify_constants(setup.region_radius, &setup.x0)?;
    let schedule = Schedule::constant(0.05)?;
    let horizon = 500;

    let trajectories = run_replications(&setup.problem, &schedule, &cert, &setup.x0, horizon, 1, 1000)?;
    let dn = estimate_dn(&trajectories)?;
    let d0 = setup.x0.sq_dist(setup.problem.minimizer())?;
    let bound = bound_sequence(d0, &schedule, &cert, horizon)?;

    println!("mu = {}, B = {}", cert.mu, cert.gradient_bound);
    println!("{:>5} {:>12} {:>12} {:>12}", "n", "d_hat", "stderr", "b_n");
    for n in (0..=horizon).step_by(50) {
        println!("{n:>5} {:>12.4e} {:>12.4e} {:>12.4e}", dn.mean[n], dn.stderr[n], bound.b[n]);
    }
    let verdict = check_recurrence(&dn, &bound, 3.0)?;
    println!("recurrence: {} ({} of {} steps violate)", verdict.pass, verdict.violations, verdict.checked);
    Ok(())
}
