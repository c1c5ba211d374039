//! Certified `μ` and `B` are audited by sampling the operating region; an
//! understated `B` or overstated `μ` is caught with a witness point.

use sgd_verify::engine::SeededGenerator;
use sgd_verify::objective::{audit_certificate, check_gradients};
use sgd_verify::presets::{reference_least_squares, reference_quadratic};

fn main() -> sgd_verify::Result<()> {
    for setup in [reference_quadratic(), reference_least_squares()] {
        let cert = setup.problem.certify_constants(setup.region_radius, &setup.x0)?;
        let mut rng = SeededGenerator::new(3);
        println!("{}: mu = {:.6}, B = {:.6}", setup.problem.family_name(), cert.mu, cert.gradient_bound);

        let grads = check_gradients(&setup.problem, 1000, &mut rng)?;
        println!("  finite differences: max rel error {:.2e}", grads.max_relative_error);

        let clean = audit_certificate(&setup.problem, &cert, 100_000, &mut rng)?;
        println!("  as certified: pass = {}, max ‖g‖²/B = {:.4}", clean.pass, clean.max_gradient_ratio);

        let low_b = cert.clone().with_gradient_bound(0.9 * cert.gradient_bound);
        let report = audit_certificate(&setup.problem, &low_b, 100_000, &mut rng)?;
        println!("  B - 10%: {} violations, witness {:?}", report.gradient_violations, report.gradient_witness);

        let high_mu = cert.clone().with_mu(1.1 * cert.mu);
        let report = audit_certificate(&setup.problem, &high_mu, 100_000, &mut rng)?;
        println!("  mu + 10%: {} violations, witness {:?}", report.convexity_violations, report.convexity_witness);
    }
    Ok(())
}
