//! `ρ_n = c1/(c2 + n)` satisfies the step-size conditions and drives the error
//! to zero; `validate` reports why.

use sgd_verify::analyzer::{bound_sequence, check_convergence, estimate_dn};
use sgd_verify::engine::run_replications;
use sgd_verify::presets::reference_quadratic;
use sgd_verify::schedule::validate;
use sgd_verify::Schedule;

fn main() -> sgd_verify::Result<()> {
    let setup = reference_quadratic();
    let cert = setup.problem.certify_constants(setup.region_radius, &setup.x0)?;
    let schedule = Schedule::inverse_time(1.0, 1.0)?;
    println!("{}: {:?}", schedule.describe(), validate(&schedule, cert.mu));

    let horizon = 10_000;
    let d0 = setup.x0.sq_dist(setup.problem.minimizer())?;
    let bound = bound_sequence(d0, &schedule, &cert, horizon)?;
    let trajectories = run_replications(&setup.problem, &schedule, &cert, &setup.x0, horizon, 11, 200)?;
    let dn = estimate_dn(&trajectories)?;
    for n in [0, 10, 100, 1000, 10_000] {
        println!("n = {n:>6}  d_hat = {:.4e}  b_n = {:.4e}", dn.mean[n], bound.b[n]);
    }
    let verdict = check_convergence(&dn, &[(1000, 0.3 * d0), (10_000, 0.05 * d0)])?;
    println!("convergence checkpoints: {}", verdict.pass);
    Ok(())
}
