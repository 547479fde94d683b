//! Parametric delay families for continuous (`tau(t)`) and discrete (`d(k)`)
//! systems.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::TimeKind;

/// A time-varying delay.
///
/// Continuous variants define `tau(t) >= 0` for `t >= 0`; discrete variants
/// define `d(k)` for `k in N_0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "snake_case",
    deny_unknown_fields,
    from = "RawDelay"
)]
pub enum DelayModel {
    /// `tau(t) = tau`.
    Constant { tau: f64 },
    /// `tau(t) = a + b sin t`, requires `a >= |b|`.
    BoundedSinusoidal { a: f64, b: f64 },
    /// Linear interpolation of `(t, tau)` pairs, constant outside the range.
    PiecewiseLinear { breakpoints: Vec<(f64, f64)> },
    /// `tau(t) = alpha t` with `0 <= alpha < 1`.
    Proportional { alpha: f64 },
    /// `tau(t) = t - ln(t + 1)`: unbounded, `tau(t)/t -> 1`.
    LogLag,
    /// `d(k) = (1 - (-1)^k) / 2`.
    AlternatingParity,
    /// `d(k) = d`.
    ConstantDiscrete { d: u64 },
    /// `d(k) = floor(alpha k)` with `0 <= alpha < 1`.
    ProportionalDiscrete { alpha: f64 },
}

// Parameterless variants as empty structs so that unknown keys are rejected.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawDelay {
    Constant { tau: f64 },
    BoundedSinusoidal { a: f64, b: f64 },
    PiecewiseLinear { breakpoints: Vec<(f64, f64)> },
    Proportional { alpha: f64 },
    LogLag {},
    AlternatingParity {},
    ConstantDiscrete { d: u64 },
    ProportionalDiscrete { alpha: f64 },
}

impl From<RawDelay> for DelayModel {
    fn from(raw: RawDelay) -> Self {
        match raw {
            RawDelay::Constant { tau } => DelayModel::Constant { tau },
            RawDelay::BoundedSinusoidal { a, b } => DelayModel::BoundedSinusoidal { a, b },
            RawDelay::PiecewiseLinear { breakpoints } => {
                DelayModel::PiecewiseLinear { breakpoints }
            }
            RawDelay::Proportional { alpha } => DelayModel::Proportional { alpha },
            RawDelay::LogLag {} => DelayModel::LogLag,
            RawDelay::AlternatingParity {} => DelayModel::AlternatingParity,
            RawDelay::ConstantDiscrete { d } => DelayModel::ConstantDiscrete { d },
            RawDelay::ProportionalDiscrete { alpha } => DelayModel::ProportionalDiscrete { alpha },
        }
    }
}

/// What is known exactly about the long-run behaviour of a delay.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DelayStructure {
    /// `0 <= tau(t) <= sup` for all `t`.
    Bounded { sup: f64 },
    /// `sup_{t > T} tau(t) / t = alpha < 1` and the ratio converges to alpha.
    Proportional { alpha: f64 },
    /// `t - tau(t) -> infinity` but neither bounded nor proportional.
    Unbounded,
}

impl DelayModel {
    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |name: &'static str, x: f64| {
            if x >= 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and >= 0, got {x}")))
            }
        };
        match self {
            DelayModel::Constant { tau } => finite_nonneg("tau", *tau),
            DelayModel::BoundedSinusoidal { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a >= b.abs()) {
                    return Err(invalid(
                        "a",
                        format!("need a >= |b| for a nonnegative delay, got a={a}, b={b}"),
                    ));
                }
                Ok(())
            }
            DelayModel::PiecewiseLinear { breakpoints } => {
                if breakpoints.is_empty() {
                    return Err(invalid("breakpoints", "at least one breakpoint required"));
                }
                for &(t, tau) in breakpoints {
                    if !t.is_finite() {
                        return Err(invalid("breakpoints", format!("non-finite time {t}")));
                    }
                    finite_nonneg("breakpoints", tau)?;
                }
                if breakpoints.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(invalid("breakpoints", "times must be strictly increasing"));
                }
                Ok(())
            }
            DelayModel::Proportional { alpha } | DelayModel::ProportionalDiscrete { alpha } => {
                if !(0.0..1.0).contains(alpha) {
                    return Err(invalid("alpha", format!("must lie in [0, 1), got {alpha}")));
                }
                Ok(())
            }
            DelayModel::LogLag
            | DelayModel::AlternatingParity
            | DelayModel::ConstantDiscrete { .. } => Ok(()),
        }
    }

    pub fn time_kind(&self) -> TimeKind {
        match self {
            DelayModel::AlternatingParity
            | DelayModel::ConstantDiscrete { .. }
            | DelayModel::ProportionalDiscrete { .. } => TimeKind::Discrete,
            _ => TimeKind::Continuous,
        }
    }

    /// Delay at time `t`. Discrete variants are evaluated at `floor(t)`.
    pub fn tau(&self, t: f64) -> f64 {
        match self {
            DelayModel::Constant { tau } => *tau,
            DelayModel::BoundedSinusoidal { a, b } => a + b * t.sin(),
            DelayModel::PiecewiseLinear { breakpoints } => piecewise(breakpoints, t),
            DelayModel::Proportional { alpha } => alpha * t.max(0.0),
            DelayModel::LogLag => {
                let t = t.max(0.0);
                t - t.ln_1p()
            }
            _ => self.d(t.max(0.0).floor() as u64) as f64,
        }
    }

    /// Discrete delay `d(k)`. Continuous variants return `ceil(tau(k))`.
    pub fn d(&self, k: u64) -> u64 {
        match self {
            DelayModel::AlternatingParity => k % 2,
            DelayModel::ConstantDiscrete { d } => *d,
            DelayModel::ProportionalDiscrete { alpha } => (alpha * k as f64).floor() as u64,
            _ => self.tau(k as f64).ceil() as u64,
        }
    }

    pub fn structure(&self) -> DelayStructure {
        match self {
            DelayModel::Proportional { alpha } | DelayModel::ProportionalDiscrete { alpha } => {
                if *alpha == 0.0 {
                    DelayStructure::Bounded { sup: 0.0 }
                } else {
                    DelayStructure::Proportional { alpha: *alpha }
                }
            }
            DelayModel::LogLag => DelayStructure::Unbounded,
            _ => DelayStructure::Bounded {
                sup: self.sup().expect("bounded variant"),
            },
        }
    }

    /// `sup_t tau(t)` when the delay is bounded.
    pub fn sup(&self) -> Option<f64> {
        match self {
            DelayModel::Constant { tau } => Some(*tau),
            DelayModel::BoundedSinusoidal { a, b } => Some(a + b.abs()),
            DelayModel::PiecewiseLinear { breakpoints } => {
                Some(breakpoints.iter().map(|b| b.1).fold(0.0, f64::max))
            }
            DelayModel::Proportional { alpha } | DelayModel::ProportionalDiscrete { alpha } => {
                (*alpha == 0.0).then_some(0.0)
            }
            DelayModel::LogLag => None,
            DelayModel::AlternatingParity => Some(1.0),
            DelayModel::ConstantDiscrete { d } => Some(*d as f64),
        }
    }

    /// Exact proportional ratio `alpha` for the proportional families.
    pub fn proportional_ratio(&self) -> Option<f64> {
        match self {
            DelayModel::Proportional { alpha } | DelayModel::ProportionalDiscrete { alpha } => {
                Some(*alpha)
            }
            _ => None,
        }
    }

    /// Length of the initial-history window: `max(0, -inf_{t >= 0} (t - tau(t)))`.
    ///
    /// Every variant here satisfies `t - tau(t) -> infinity`, so the
    /// infimum is attained on a bounded interval and is computed exactly.
    pub fn history_depth(&self) -> Result<f64> {
        self.validate()?;
        let depth = match self {
            DelayModel::Constant { tau } => *tau,
            DelayModel::BoundedSinusoidal { a, b } => sinusoidal_depth(*a, *b),
            DelayModel::PiecewiseLinear { breakpoints } => {
                let lowest = std::iter::once(0.0)
                    .chain(breakpoints.iter().map(|b| b.0).filter(|&t| t >= 0.0))
                    .map(|t| t - piecewise(breakpoints, t))
                    .fold(f64::INFINITY, f64::min);
                (-lowest).max(0.0)
            }
            DelayModel::Proportional { .. }
            | DelayModel::LogLag
            | DelayModel::AlternatingParity
            | DelayModel::ProportionalDiscrete { .. } => 0.0,
            DelayModel::ConstantDiscrete { d } => *d as f64,
        };
        Ok(depth)
    }
}

fn piecewise(breakpoints: &[(f64, f64)], t: f64) -> f64 {
    let first = breakpoints[0];
    let last = breakpoints[breakpoints.len() - 1];
    if t <= first.0 {
        return first.1;
    }
    if t >= last.0 {
        return last.1;
    }
    let j = breakpoints.partition_point(|b| b.0 <= t);
    let (t0, v0) = breakpoints[j - 1];
    let (t1, v1) = breakpoints[j];
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

/// `max(0, -min_{t >= 0} (t - a - b sin t))`.
fn sinusoidal_depth(a: f64, b: f64) -> f64 {
    let h = |t: f64| t - a - b * t.sin();
    let mut lowest = h(0.0);
    if b.abs() > 1.0 {
        // Local minima sit where cos t = 1/b and b sin t > 0; beyond
        // t = a + |b| the function is positive.
        let c = (1.0 / b).acos();
        let base = if b > 0.0 { c } else { 2.0 * PI - c };
        let mut t = base;
        while t <= a + b.abs() {
            lowest = lowest.min(h(t));
            t += 2.0 * PI;
        }
    }
    (-lowest).max(0.0)
}
