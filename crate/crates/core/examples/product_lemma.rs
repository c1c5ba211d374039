//! `∏_{ℓ=n}^{n+k} (1 − ρ_ℓ μ)` against its closed form and the majorant
//! `exp(−μ Σ ρ_ℓ)`.

use sgd_verify::analyzer::{product_closed_form, product_decay};
use sgd_verify::Schedule;

fn main() -> sgd_verify::Result<()> {
    let schedules = [Schedule::constant(0.1)?, Schedule::inverse_time(1.0, 1.0)?, Schedule::inverse_time(0.5, 4.0)?];
    for schedule in &schedules {
        println!("{}", schedule.describe());
        for k in [10, 100, 10_000] {
            let p = product_decay(schedule, 1.0, 1, k)?;
            let closed = product_closed_form(schedule, 1.0, 1, k)
                .map(|c| format!("{c:.6e}"))
                .unwrap_or_else(|| "-".into());
            println!("  k = {k:>6}  product = {:.6e}  closed form = {closed:>12}  majorant = {:.6e}", p.product, p.majorant);
        }
    }
    Ok(())
}
