//! Under a constant rate the error settles below `θ = ρB/μ`, and `θ` is a
//! fixed point of the envelope.

use sgd_verify::analyzer::{bound_sequence, check_neighborhood, estimate_dn, neighborhood_level};
use sgd_verify::engine::run_replications;
use sgd_verify::presets::reference_quadratic;
use sgd_verify::Schedule;

fn main() -> sgd_verify::Result<()> {
    let setup = reference_quadratic();
    let cert = setup.problem.certify_constants(setup.region_radius, &setup.x0)?;

    for rho in [0.1, 0.05, 0.01] {
        let schedule = Schedule::constant(rho)?;
        let theta = neighborhood_level(rho, &cert);
        let trajectories = run_replications(&setup.problem, &schedule, &cert, &setup.x0, 5000, 7, 200)?;
        let dn = estimate_dn(&trajectories)?;
        let tail = dn.mean[dn.mean.len() - 500..].iter().sum::<f64>() / 500.0;
        let verdict = check_neighborhood(&dn, &cert, &schedule, 500, 0.2)?;
        let fixed = bound_sequence(theta, &schedule, &cert, 1000)?;
        println!(
            "rho = {rho:<5} theta = {theta:.4e}  tail mean d_hat = {tail:.4e}  b_1000 from theta = {:.4e}  within: {}",
            fixed.b[1000], verdict.pass
        );
    }
    Ok(())
}
