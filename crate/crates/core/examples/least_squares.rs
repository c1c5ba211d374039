//! SGD on a finite-sum least-squares problem, sampling one row per step,
//! including the one-step descent inequality at a few points.

use sgd_verify::analyzer::{bound_sequence, check_descent_inequality, check_recurrence, estimate_dn};
use sgd_verify::engine::{run_replications, SeededGenerator};
use sgd_verify::objective::sample_in_ball;
use sgd_verify::presets::reference_least_squares;
use sgd_verify::{ParameterVector, Schedule};

fn main() -> sgd_verify::Result<()> {
    let setup = reference_least_squares();
    let problem = &setup.problem;
    let cert = problem.certify_constants(setup.region_radius, &setup.x0)?;
    println!("X* = {:?}", problem.minimizer().as_slice());
    println!("mu = {:.6}, B = {:.6}", cert.mu, cert.gradient_bound);

    let schedule = Schedule::constant(0.02)?;
    let horizon = 2000;
    let trajectories = run_replications(problem, &schedule, &cert, &setup.x0, horizon, 5, 400)?;
    let dn = estimate_dn(&trajectories)?;
    let d0 = setup.x0.sq_dist(problem.minimizer())?;
    let bound = bound_sequence(d0, &schedule, &cert, horizon)?;
    println!("recurrence holds: {}", check_recurrence(&dn, &bound, 3.0)?.pass);
    println!("d_hat at n = {horizon}: {:.4e}", dn.mean[horizon]);

    let mut rng = SeededGenerator::new(9);
    for _ in 0..3 {
        let x = ParameterVector::new(sample_in_ball(cert.region_center.as_slice(), cert.region_radius, &mut rng))?;
        let v = check_descent_inequality(problem, &cert, &x, 10_000, &mut rng)?;
        println!("descent at {:?}: {}", x.as_slice(), v.pass);
    }
    Ok(())
}
