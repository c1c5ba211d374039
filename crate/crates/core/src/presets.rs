//! Reference problems used by the shipped configs, examples and tests.

use crate::objective::{ParameterVector, StochasticProblem};

/// A problem together with a starting point and operating radius.
#[derive(Debug, Clone)]
pub struct Setup {
    pub problem: StochasticProblem,
    pub x0: ParameterVector,
    pub region_radius: f64,
}

/// `N = 2`, `μ_q = 1`, `m = 0`, `r = 0.5`, started at `(2, 0)` with
/// `R_op = 2`. The radius covers both `‖X0 − m‖` and `r√N`, so iterates
/// provably stay in the region whenever `ρ_n ≤ 1`.
pub fn reference_quadratic() -> Setup {
    let problem = StochasticProblem::shifted_quadratic(1.0, ParameterVector::zeros(2), 0.5)
        .expect("valid reference quadratic");
    Setup {
        problem,
        x0: ParameterVector::new(vec![2.0, 0.0]).expect("finite"),
        region_radius: 2.0,
    }
}

/// Eight rows in `ℝ²` with inconsistent targets, so the per-sample gradients
/// do not vanish at the minimizer.
pub fn reference_least_squares() -> Setup {
    let rows = vec![
        vec![1.0, 0.0],
        vec![0.0, 1.0],
        vec![1.0, 1.0],
        vec![1.0, -1.0],
        vec![2.0, 0.5],
        vec![-0.5, 1.5],
        vec![0.5, -1.0],
        vec![1.0, 0.5],
    ];
    let targets = vec![1.0, -1.0, 0.5, 1.5, 2.0, -1.0, 1.0, 0.0];
    let problem = StochasticProblem::finite_sum(rows, targets).expect("valid reference design");
    let mut x0 = problem.minimizer().clone().into_inner();
    x0[0] += 1.0;
    x0[1] -= 0.5;
    Setup {
        problem,
        x0: ParameterVector::new(x0).expect("finite"),
        region_radius: 2.0,
    }
}
