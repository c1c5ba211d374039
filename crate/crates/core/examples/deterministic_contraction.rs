//! With the noise radius set to zero every step is plain gradient descent, so
//! the iterate contracts by exactly `1 - ρμ` per step.

use sgd_verify::engine::Sgd;
use sgd_verify::{ParameterVector, Schedule, StochasticProblem};

fn main() -> sgd_verify::Result<()> {
    let problem = StochasticProblem::shifted_quadratic(1.0, ParameterVector::zeros(2), 0.0)?;
    let schedule = Schedule::constant(0.5)?;
    let x0 = ParameterVector::new(vec![2.0, -1.5])?;
    let mut sgd = Sgd::new(&problem, &schedule, &x0, 0)?;

    println!("{:>4} {:>24} {:>24}", "n", "x[0]", "0.5^n * x0[0]");
    for n in 0..=20 {
        if n > 0 {
            sgd.advance()?;
        }
        if n % 5 == 0 {
            println!("{n:>4} {:>24.16e} {:>24.16e}", sgd.iterate()[0], 0.5_f64.powi(n) * x0[0]);
        }
    }
    Ok(())
}
