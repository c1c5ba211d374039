//! Deterministic learning-rate sequences `ρ_n`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Number of leading indices inspected when bounding a custom sequence.
pub const CUSTOM_SCAN_LENGTH: u64 = 10_000;

/// A positive rate sequence fixed before the run.
#[derive(Clone)]
pub enum Schedule {
    /// `ρ_n = rho`.
    Constant { rho: f64 },
    /// `ρ_n = c1 / (c2 + n)`.
    InverseTime { c1: f64, c2: f64 },
    /// Any user-supplied sequence. Its analytic properties are unknown.
    Custom(CustomSchedule),
}

/// A named closure `n ↦ ρ_n`.
#[derive(Clone)]
pub struct CustomSchedule {
    name: String,
    rate: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Constant { rho } => f.debug_struct("Constant").field("rho", rho).finish(),
            Schedule::InverseTime { c1, c2 } => f
                .debug_struct("InverseTime")
                .field("c1", c1)
                .field("c2", c2)
                .finish(),
            Schedule::Custom(c) => f.debug_tuple("Custom").field(&c.name).finish(),
        }
    }
}

impl PartialEq for Schedule {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Schedule::Constant { rho: a }, Schedule::Constant { rho: b }) => a == b,
            (Schedule::InverseTime { c1: a1, c2: a2 }, Schedule::InverseTime { c1: b1, c2: b2 }) => {
                a1 == b1 && a2 == b2
            }
            (Schedule::Custom(a), Schedule::Custom(b)) => Arc::ptr_eq(&a.rate, &b.rate),
            _ => false,
        }
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::config(key, format!("must be finite and > 0, got {v}")))
    }
}

impl Schedule {
    pub fn constant(rho: f64) -> Result<Self> {
        Ok(Schedule::Constant {
            rho: positive("schedule.rho", rho)?,
        })
    }

    pub fn inverse_time(c1: f64, c2: f64) -> Result<Self> {
        Ok(Schedule::InverseTime {
            c1: positive("schedule.c1", c1)?,
            c2: positive("schedule.c2", c2)?,
        })
    }

    /// Wraps an arbitrary sequence. The caller is responsible for positivity;
    /// the engine rejects a non-positive rate when it is used.
    pub fn custom(name: impl Into<String>, rate: impl Fn(u64) -> f64 + Send + Sync + 'static) -> Self {
        Schedule::Custom(CustomSchedule {
            name: name.into(),
            rate: Arc::new(rate),
        })
    }

    /// `ρ_n`.
    pub fn rate(&self, n: u64) -> f64 {
        match self {
            Schedule::Constant { rho } => *rho,
            Schedule::InverseTime { c1, c2 } => c1 / (c2 + n as f64),
            Schedule::Custom(c) => (c.rate)(n),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Schedule::Constant { .. })
    }

    pub fn describe(&self) -> String {
        match self {
            Schedule::Constant { rho } => format!("constant(rho={rho})"),
            Schedule::InverseTime { c1, c2 } => format!("inverse_time(c1={c1}, c2={c2})"),
            Schedule::Custom(c) => format!("custom({})", c.name),
        }
    }
}

/// Analytic properties of a schedule relative to the step-size conditions
/// `ρ_n → 0`, `Σ ρ_n = ∞` and `ρ μ < 1`.
///
/// `None` means the property is not known for the family (custom schedules).
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleReport {
    pub tends_to_zero: Option<bool>,
    pub sum_diverges: Option<bool>,
    pub step_conditions_hold: Option<bool>,
    /// `sup_n ρ_n μ`; for custom schedules the max over the first
    /// [`CUSTOM_SCAN_LENGTH`] indices.
    pub max_rho_mu: f64,
    pub stability_ok: bool,
}

/// Classifies `schedule` analytically. Truncated partial sums are never used
/// to decide divergence.
pub fn validate(schedule: &Schedule, mu: f64) -> Result<ScheduleReport> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::usage(format!("mu must be finite and > 0, got {mu}")));
    }
    let (tends_to_zero, sum_diverges, max_rho_mu) = match schedule {
        Schedule::Constant { rho } => (Some(false), Some(true), rho * mu),
        // Harmonic tail: Σ c1/(c2+n) diverges; decreasing so the sup is at n = 0.
        Schedule::InverseTime { .. } => (Some(true), Some(true), schedule.rate(0) * mu),
        Schedule::Custom(_) => (
            None,
            None,
            (0..CUSTOM_SCAN_LENGTH)
                .map(|n| schedule.rate(n) * mu)
                .fold(f64::NEG_INFINITY, f64::max),
        ),
    };
    let step_conditions_hold = match (tends_to_zero, sum_diverges) {
        (Some(a), Some(b)) => Some(a && b),
        _ => None,
    };
    Ok(ScheduleReport {
        tends_to_zero,
        sum_diverges,
        step_conditions_hold,
        max_rho_mu,
        stability_ok: max_rho_mu < 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_examples() {
        assert_eq!(Schedule::constant(0.05).unwrap().rate(999), 0.05);
        assert_eq!(Schedule::inverse_time(1.0, 9.0).unwrap().rate(1), 0.1);
        assert_eq!(Schedule::inverse_time(2.0, 0.5).unwrap().rate(0), 4.0);
    }

    #[test]
    fn parameters_must_be_positive() {
        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(Schedule::constant(bad).is_err());
            assert!(Schedule::inverse_time(bad, 1.0).is_err());
            assert!(Schedule::inverse_time(1.0, bad).is_err());
        }
        let err = Schedule::inverse_time(1.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "schedule.c2"));
    }

    #[test]
    fn validate_examples() {
        let r = validate(&Schedule::constant(0.1).unwrap(), 1.0).unwrap();
        assert_eq!(r.step_conditions_hold, Some(false));
        assert!(r.stability_ok);

        let r = validate(&Schedule::inverse_time(1.0, 1.0).unwrap(), 1.0).unwrap();
        assert_eq!(r.step_conditions_hold, Some(true));
        assert_eq!(r.max_rho_mu, 1.0);

        let r = validate(&Schedule::constant(2.0).unwrap(), 1.0).unwrap();
        assert!(!r.stability_ok);
    }

    #[test]
    fn custom_schedules_are_unknown() {
        let s = Schedule::custom("sqrt", |n| 0.5 / ((n + 1) as f64).sqrt());
        let r = validate(&s, 1.0).unwrap();
        assert_eq!(r.step_conditions_hold, None);
        assert_eq!(r.max_rho_mu, 0.5);
        assert_eq!(s.rate(3), 0.25);
    }

    #[test]
    fn validate_rejects_bad_mu() {
        assert!(validate(&Schedule::constant(0.1).unwrap(), 0.0).is_err());
    }
}
