//! Fixed-step integration of delayed systems and trajectory diagnostics.
//!
//! Continuous systems use classical RK4. The delay is evaluated at each
//! stage time and the delayed state is read from the stored grid by linear
//! interpolation, so the full step history is kept. Discrete systems are
//! iterated exactly.

pub mod delay;

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

pub use delay::{DelayModel, DelayStructure};

use crate::error::{invalid, Error, Result};
use crate::model::{Dilation, LevelSetProbe, Lyapunov, SystemModel, TimeKind};
use crate::rates::DecayBound;

/// Values in `[-CLAMP_TOL, 0)` are treated as roundoff and set to zero.
pub const CLAMP_TOL: f64 = 1e-12;
/// Values below `-VIOLATION_TOL` are recorded as positivity violations.
pub const VIOLATION_TOL: f64 = 1e-9;

/// Initial history `phi` on `[-depth, 0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum History {
    Constant(Vec<f64>),
    /// Samples at increasing `times` ending at 0, interpolated linearly.
    Table {
        times: Vec<f64>,
        states: Vec<Vec<f64>>,
    },
}

impl History {
    pub fn n(&self) -> usize {
        match self {
            History::Constant(x) => x.len(),
            History::Table { states, .. } => states.first().map_or(0, Vec::len),
        }
    }

    /// Checks shape and that the history covers `[-depth, 0]`.
    pub fn validate(&self, n: usize, depth: f64) -> Result<()> {
        let finite_nonneg = |x: &[f64]| x.iter().all(|v| v.is_finite());
        match self {
            History::Constant(x) => {
                if x.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: x.len(),
                    });
                }
                if !finite_nonneg(x) {
                    return Err(invalid("initial_history", "non-finite value"));
                }
            }
            History::Table { times, states } => {
                if times.is_empty() || times.len() != states.len() {
                    return Err(invalid(
                        "initial_history",
                        "times and states must be non-empty and of equal length",
                    ));
                }
                if let Some(s) = states.iter().find(|s| s.len() != n) {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: s.len(),
                    });
                }
                if !states.iter().all(|s| finite_nonneg(s)) || !times.iter().all(|t| t.is_finite())
                {
                    return Err(invalid("initial_history", "non-finite value"));
                }
                if times.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(invalid(
                        "initial_history",
                        "times must be strictly increasing",
                    ));
                }
                if *times.last().unwrap() != 0.0 {
                    return Err(invalid("initial_history", "last time must be 0"));
                }
                if times[0] > -depth {
                    return Err(invalid(
                        "initial_history",
                        format!(
                            "table starts at {} but the delay reaches back to {}",
                            times[0], -depth
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    /// `phi(s)` for `s <= 0`, held constant outside the table range.
    pub fn eval(&self, s: f64) -> Vec<f64> {
        match self {
            History::Constant(x) => x.clone(),
            History::Table { times, states } => {
                if s <= times[0] {
                    return states[0].clone();
                }
                let j = times.partition_point(|&t| t <= s);
                if j >= times.len() {
                    return states[times.len() - 1].clone();
                }
                let w = (s - times[j - 1]) / (times[j] - times[j - 1]);
                lerp(&states[j - 1], &states[j], w)
            }
        }
    }

    /// `sup_{s in [-depth, 0]} V(phi(s))`.
    ///
    /// Each coordinate is monotone on a table segment, so the supremum is
    /// attained at a node or at the window edge.
    pub fn sup_norm(&self, lyap: &Lyapunov, depth: f64) -> Result<f64> {
        match self {
            History::Constant(x) => lyap.value(x),
            History::Table { times, states } => {
                let mut best = lyap.value(&self.eval(-depth))?;
                for (t, x) in times.iter().zip(states) {
                    if *t >= -depth {
                        best = best.max(lyap.value(x)?);
                    }
                }
                Ok(best)
            }
        }
    }
}

/// A state component that dropped below `-VIOLATION_TOL`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityViolation {
    pub time: f64,
    pub index: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub kind: TimeKind,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `V(x(t_j))` once a Lyapunov function is attached.
    pub v_values: Option<Vec<f64>>,
    /// Step size; 1 for discrete runs.
    pub step: f64,
    pub delays: Vec<DelayModel>,
    pub history: History,
    pub positivity_violations: Vec<PositivityViolation>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    pub fn attach_lyapunov(&mut self, lyap: &Lyapunov) {
        self.v_values = Some(self.states.iter().map(|x| lyap.value_clamped(x)).collect());
    }

    /// Smallest component over the whole run.
    pub fn min_component(&self) -> f64 {
        self.states
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Writes `t,x_1..x_n[,V][,bound]` with 17 significant digits.
    pub fn write_csv<W: Write>(
        &self,
        mut w: W,
        lyap: Option<&Lyapunov>,
        bound: Option<&DecayBound>,
    ) -> io::Result<()> {
        let n = self.states.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        if lyap.is_some() {
            header.push("V".into());
        }
        if bound.is_some() {
            header.push("bound".into());
        }
        writeln!(w, "{}", header.join(","))?;
        for (t, x) in self.times.iter().zip(&self.states) {
            let mut row = format!("{t:.16e}");
            for xi in x {
                row.push_str(&format!(",{xi:.16e}"));
            }
            if let Some(l) = lyap {
                row.push_str(&format!(",{:.16e}", l.value_clamped(x)));
            }
            if let Some(b) = bound {
                row.push_str(&format!(",{:.16e}", b.evaluate(*t)));
            }
            writeln!(w, "{row}")?;
        }
        Ok(())
    }
}

fn lerp(a: &[f64], b: &[f64], w: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + w * (y - x)).collect()
}

/// Pairs each delayed field with its delay; a single delay is shared.
fn assign_delays<'a>(model: &SystemModel, delays: &'a [DelayModel]) -> Result<Vec<&'a DelayModel>> {
    let q = model.delayed().len();
    let assigned: Vec<&DelayModel> = match delays.len() {
        1 => vec![&delays[0]; q],
        k if k == q => delays.iter().collect(),
        k => {
            return Err(invalid(
                "delay",
                format!("{k} delays given for {q} delayed fields"),
            ))
        }
    };
    for d in &assigned {
        d.validate()?;
        if d.time_kind() != model.kind() {
            return Err(invalid(
                "delay",
                format!(
                    "{:?} delay used with a {:?} system",
                    d.time_kind(),
                    model.kind()
                ),
            ));
        }
    }
    Ok(assigned)
}

/// Length of the history window needed by a set of delays.
pub fn history_depth(delays: &[DelayModel]) -> Result<f64> {
    delays
        .iter()
        .map(DelayModel::history_depth)
        .try_fold(0.0, |acc: f64, d| Ok(acc.max(d?)))
}

fn clamp_and_record(x: &mut [f64], time: f64, violations: &mut Vec<PositivityViolation>) {
    for (index, xi) in x.iter_mut().enumerate() {
        if *xi < -VIOLATION_TOL {
            violations.push(PositivityViolation {
                time,
                index,
                value: *xi,
            });
        } else if *xi < 0.0 && *xi >= -CLAMP_TOL {
            *xi = 0.0;
        }
    }
}

struct ContinuousState<'a> {
    model: &'a SystemModel,
    delays: Vec<&'a DelayModel>,
    history: &'a History,
    depth: f64,
    h: f64,
    states: Vec<Vec<f64>>,
}

impl ContinuousState<'_> {
    /// State at `s`, given the current step start `t_n` and a stage state
    /// `y` at stage time `ts`.
    fn lookup(&self, s: f64, t_n: f64, ts: f64, y: &[f64]) -> Result<Vec<f64>> {
        if s >= ts {
            return Ok(y.to_vec());
        }
        let n = self.states.len() - 1;
        let x_n = &self.states[n];
        if s > t_n {
            return Ok(lerp(x_n, y, (s - t_n) / (ts - t_n)));
        }
        if s <= 0.0 {
            if s < -self.depth - 1e-9 * self.depth.max(1.0) {
                return Err(Error::HistoryUnderrun {
                    arg: s,
                    depth: self.depth,
                });
            }
            return Ok(self.history.eval(s));
        }
        let j = ((s / self.h).floor() as usize).min(n);
        let w = s / self.h - j as f64;
        if j == n || w <= 0.0 {
            Ok(self.states[j].clone())
        } else {
            Ok(lerp(&self.states[j], &self.states[j + 1], w))
        }
    }

    fn rhs(&self, t_n: f64, ts: f64, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.model.eval_f(y)?;
        for (g, d) in self.model.delayed().iter().zip(&self.delays) {
            let xd = self.lookup(ts - d.tau(ts), t_n, ts, y)?;
            g.eval_add_into(&xd, &mut out);
        }
        Ok(out)
    }
}

fn axpy(x: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    x.iter().zip(k).map(|(xi, ki)| xi + a * ki).collect()
}

/// Integrates `x' = f(x) + sum_q g_q(x(t - tau_q(t)))` on `[0, horizon]`
/// with fixed step `h`. Grid times are `n * h`.
///
/// A single delay is shared by every delayed field. A non-finite state
/// returns [`Error::Diverged`] carrying the finite prefix.
pub fn simulate_continuous(
    model: &SystemModel,
    delays: &[DelayModel],
    history: &History,
    h: f64,
    horizon: f64,
) -> Result<Trajectory> {
    if model.kind() != TimeKind::Continuous {
        return Err(invalid("model", "expected a continuous-time system"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid("h", format!("must be positive, got {h}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid(
            "horizon",
            format!("must be positive, got {horizon}"),
        ));
    }
    let assigned = assign_delays(model, delays)?;
    let depth = history_depth(delays)?;
    history.validate(model.n(), depth)?;

    let steps = (horizon / h - 1e-9).ceil() as usize;
    let mut sim = ContinuousState {
        model,
        delays: assigned,
        history,
        depth,
        h,
        states: Vec::with_capacity(steps + 1),
    };
    let mut violations = Vec::new();
    let mut x0 = history.eval(0.0);
    clamp_and_record(&mut x0, 0.0, &mut violations);
    sim.states.push(x0);

    for n in 0..steps {
        let t = n as f64 * h;
        let tm = t + 0.5 * h;
        let t1 = (n + 1) as f64 * h;
        let x = sim.states[n].clone();
        let k1 = sim.rhs(t, t, &x)?;
        let y2 = axpy(&x, 0.5 * h, &k1);
        let k2 = sim.rhs(t, tm, &y2)?;
        let y3 = axpy(&x, 0.5 * h, &k2);
        let k3 = sim.rhs(t, tm, &y3)?;
        let y4 = axpy(&x, h, &k3);
        let k4 = sim.rhs(t, t1, &y4)?;
        let mut next: Vec<f64> = (0..x.len())
            .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        if next.iter().any(|v| !v.is_finite()) {
            let trajectory = finish(
                TimeKind::Continuous,
                sim.states,
                h,
                delays,
                history,
                violations,
            );
            return Err(Error::Diverged {
                time: t1,
                trajectory: Box::new(trajectory),
            });
        }
        clamp_and_record(&mut next, t1, &mut violations);
        sim.states.push(next);
    }
    Ok(finish(
        TimeKind::Continuous,
        sim.states,
        h,
        delays,
        history,
        violations,
    ))
}

fn finish(
    kind: TimeKind,
    states: Vec<Vec<f64>>,
    step: f64,
    delays: &[DelayModel],
    history: &History,
    positivity_violations: Vec<PositivityViolation>,
) -> Trajectory {
    Trajectory {
        kind,
        times: (0..states.len()).map(|n| n as f64 * step).collect(),
        states,
        v_values: None,
        step,
        delays: delays.to_vec(),
        history: history.clone(),
        positivity_violations,
    }
}

/// Iterates `x(k+1) = f(x(k)) + sum_q g_q(x(k - d_q(k)))` for `k < steps`.
/// History values at negative indices are read at integer times.
pub fn simulate_discrete(
    model: &SystemModel,
    delays: &[DelayModel],
    history: &History,
    steps: u64,
) -> Result<Trajectory> {
    if model.kind() != TimeKind::Discrete {
        return Err(invalid("model", "expected a discrete-time system"));
    }
    if steps == 0 {
        return Err(invalid("horizon", "need at least one step"));
    }
    let assigned = assign_delays(model, delays)?;
    let depth = history_depth(delays)?;
    history.validate(model.n(), depth)?;

    let mut states = vec![history.eval(0.0)];
    let mut violations = Vec::new();
    for k in 0..steps {
        let mut next = model.eval_f(&states[k as usize])?;
        for (g, d) in model.delayed().iter().zip(&assigned) {
            let idx = k as i64 - d.d(k) as i64;
            let xd = if idx >= 0 {
                states[idx as usize].clone()
            } else if (-idx) as f64 <= depth {
                history.eval(idx as f64)
            } else {
                return Err(Error::HistoryUnderrun {
                    arg: idx as f64,
                    depth,
                });
            };
            g.eval_add_into(&xd, &mut next);
        }
        let time = (k + 1) as f64;
        if next.iter().any(|v| !v.is_finite()) {
            let trajectory = finish(TimeKind::Discrete, states, 1.0, delays, history, violations);
            return Err(Error::Diverged {
                time,
                trajectory: Box::new(trajectory),
            });
        }
        for (index, &value) in next.iter().enumerate() {
            if value < 0.0 {
                violations.push(PositivityViolation { time, index, value });
            }
        }
        states.push(next);
    }
    Ok(finish(
        TimeKind::Discrete,
        states,
        1.0,
        delays,
        history,
        violations,
    ))
}

/// Outcome of comparing a trajectory with a decay envelope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    /// `max_t W(t) mu(t)` over the whole run.
    pub m_fit: f64,
    /// Tail maximum of `W mu` divided by the head maximum.
    pub worst_ratio_tail: f64,
    pub holds: bool,
}

/// Relative slack allowed for the tail of `W(t) mu(t)` over its head.
pub const ENVELOPE_SLACK: f64 = 0.05;

/// Checks that `W(t) mu(t)` with `W(t) = max_i (x_i / v_i)^(r_max / r_i)`
/// stays bounded: its maximum over `t >= settle_fraction * T` must not
/// exceed the maximum before that time by more than 5%.
pub fn envelope_check(
    traj: &Trajectory,
    bound: &DecayBound,
    v: &[f64],
    dilation: &Dilation,
    settle_fraction: f64,
) -> Result<EnvelopeReport> {
    if traj.is_empty() {
        return Err(invalid("trajectory", "empty"));
    }
    if !(0.0..1.0).contains(&settle_fraction) {
        return Err(invalid(
            "settle_fraction",
            format!("must lie in [0, 1), got {settle_fraction}"),
        ));
    }
    let lyap = Lyapunov::new(v, dilation)?;
    let scaled: Vec<f64> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, x)| lyap.value_clamped(x) * bound.mu(t))
        .collect();
    let t_end = *traj.times.last().unwrap();
    let split = traj
        .times
        .partition_point(|&t| t < settle_fraction * t_end)
        .max(1)
        .min(scaled.len());
    let head = scaled[..split].iter().copied().fold(0.0, f64::max);
    let tail = scaled[split..].iter().copied().fold(0.0, f64::max);
    let m_fit = head.max(tail);
    let worst_ratio_tail = if tail == 0.0 {
        0.0
    } else if head == 0.0 {
        f64::INFINITY
    } else {
        tail / head
    };
    Ok(EnvelopeReport {
        m_fit,
        worst_ratio_tail,
        holds: worst_ratio_tail <= 1.0 + ENVELOPE_SLACK,
    })
}

const MAX_LEVELS: u32 = 10_000;

/// Entry times `t_m` into the nested sets `{V <= gamma^m phi_norm}`.
///
/// `t_m` is the first grid time from which `V` stays below the threshold
/// for the rest of the run. The sequence stops at the first level that is
/// never entered for good.
pub fn level_set_descent(
    traj: &Trajectory,
    v: &[f64],
    dilation: &Dilation,
    gamma: f64,
    phi_norm: f64,
) -> Result<Vec<f64>> {
    let probe = LevelSetProbe::new(gamma, phi_norm)?;
    let lyap = Lyapunov::new(v, dilation)?;
    let mut suffix_max: Vec<f64> = traj.states.iter().map(|x| lyap.value_clamped(x)).collect();
    for j in (0..suffix_max.len().saturating_sub(1)).rev() {
        suffix_max[j] = suffix_max[j].max(suffix_max[j + 1]);
    }

    let mut entries = Vec::new();
    let mut from = 0;
    for m in 0..MAX_LEVELS {
        let level = probe.threshold(m);
        if m > 0 && level == 0.0 {
            break;
        }
        let threshold = level + 1e-12;
        // suffix_max is non-increasing
        let j = from + suffix_max[from..].partition_point(|&w| w > threshold);
        if j == suffix_max.len() {
            break;
        }
        entries.push(traj.times[j]);
        from = j;
        if gamma == 0.0 {
            break;
        }
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Monomial, PolyVectorField};
    use crate::rates::{DecayBound, DecayForm};
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn scalar(kind: TimeKind, a: f64, b: f64) -> SystemModel {
        SystemModel::linear(kind, &[vec![a]], &[vec![vec![b]]]).unwrap()
    }

    fn square_map() -> SystemModel {
        let f = PolyVectorField::new(1, vec![vec![Monomial::new(1.0, vec![2])]]).unwrap();
        SystemModel::new(TimeKind::Discrete, f, vec![], Dilation::standard(1), 1.0).unwrap()
    }

    fn exponential(eta: f64) -> DecayBound {
        DecayBound::new(
            DecayForm::Exponential { eta },
            eta,
            vec![1.0],
            vec![Some(eta)],
        )
    }

    #[test]
    fn undelayed_exponential() {
        let model = scalar(TimeKind::Continuous, -1.0, 0.0);
        let traj = simulate_continuous(
            &model,
            &[DelayModel::Constant { tau: 0.0 }],
            &History::Constant(vec![1.0]),
            1e-3,
            5.0,
        )
        .unwrap();
        for (t, x) in traj.times.iter().zip(&traj.states) {
            assert!((x[0] - (-t).exp()).abs() < 1e-8);
        }
        assert_eq!(traj.len(), 5001);
        assert_eq!(traj.times[5000], 5.0);
    }

    #[test]
    fn closed_form_piecewise_delay() {
        let model = SystemModel::linear(
            TimeKind::Continuous,
            &[vec![1.0, 0.0], vec![-1.0, 0.0]],
            &[vec![vec![0.0, 0.0], vec![E, 0.0]]],
        )
        .unwrap();
        let delay = DelayModel::PiecewiseLinear {
            breakpoints: vec![(0.0, 0.0), (1.0, 0.0), (2.0, 1.0)],
        };
        let traj = simulate_continuous(
            &model,
            &[delay],
            &History::Constant(vec![1.0, 1.0]),
            1e-3,
            2.0,
        )
        .unwrap();
        let x1 = &traj.states[1000];
        assert!((x1[1] - (1.0 + (E - 1.0).powi(2))).abs() < 1e-5);
        let x2 = traj.last_state().unwrap();
        assert!((x2[0] - E * E).abs() < 1e-5);
        assert!((x2[1] - (1.0 + E * E - E + 1.0)).abs() < 1e-5);
    }

    #[test]
    fn scalar_delay_interpolates_history() {
        // x' = -x(t - 1) with phi = 1: x(t) = 1 - t on [0, 1].
        let model = scalar(TimeKind::Continuous, 0.0, -1.0);
        let traj = simulate_continuous(
            &model,
            &[DelayModel::Constant { tau: 1.0 }],
            &History::Constant(vec![1.0]),
            0.01,
            2.0,
        )
        .unwrap();
        assert!((traj.states[50][0] - 0.5).abs() < 1e-12);
        // x(t) = t^2 / 2 - 2 t + 3 / 2 on [1, 2]
        assert!((traj.states[200][0] + 0.5).abs() < 1e-9);
        assert!(!traj.positivity_violations.is_empty());
    }

    #[test]
    fn history_underrun_is_reported() {
        let model = scalar(TimeKind::Continuous, -1.0, 0.5);
        let table = History::Table {
            times: vec![-1.0, 0.0],
            states: vec![vec![1.0], vec![1.0]],
        };
        assert!(simulate_continuous(
            &model,
            &[DelayModel::Constant { tau: 2.0 }],
            &table,
            0.01,
            1.0
        )
        .is_err());
        let mut sim = ContinuousState {
            model: &model,
            delays: vec![],
            history: &table,
            depth: 1.0,
            h: 0.1,
            states: vec![vec![1.0]],
        };
        sim.states.push(vec![1.0]);
        assert!(matches!(
            sim.lookup(-1.5, 0.1, 0.1, &[1.0]),
            Err(Error::HistoryUnderrun { .. })
        ));
    }

    #[test]
    fn table_history() {
        let h = History::Table {
            times: vec![-2.0, -1.0, 0.0],
            states: vec![vec![0.0], vec![2.0], vec![1.0]],
        };
        assert_eq!(h.eval(-1.5), vec![1.0]);
        assert_eq!(h.eval(-3.0), vec![0.0]);
        assert_eq!(h.eval(0.0), vec![1.0]);
        let lyap = Lyapunov::new(&[1.0], &Dilation::standard(1)).unwrap();
        assert_eq!(h.sup_norm(&lyap, 2.0).unwrap(), 2.0);
        assert_eq!(h.sup_norm(&lyap, 0.5).unwrap(), 1.5);
        assert!(h.validate(1, 3.0).is_err());
        assert!(h.validate(2, 1.0).is_err());
        assert!(History::Table {
            times: vec![-1.0],
            states: vec![vec![1.0]]
        }
        .validate(1, 0.0)
        .is_err());
    }

    #[test]
    fn discrete_alternating_identity() {
        let model = scalar(TimeKind::Discrete, 2.0, -1.0);
        let traj = simulate_discrete(
            &model,
            &[DelayModel::AlternatingParity],
            &History::Constant(vec![3.0]),
            100,
        )
        .unwrap();
        assert!(traj.states.iter().all(|x| x[0] == 3.0));
    }

    #[test]
    fn discrete_squaring() {
        let traj = simulate_discrete(&square_map(), &[], &History::Constant(vec![0.5]), 3).unwrap();
        assert_eq!(traj.states[3][0], 0.5f64.powi(8));
        match simulate_discrete(&square_map(), &[], &History::Constant(vec![1.5]), 20) {
            Err(Error::Diverged { time, trajectory }) => {
                assert_eq!(time, 11.0);
                assert_eq!(trajectory.len(), 11);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn discrete_constant_delay_reads_history() {
        // x(k+1) = x(k - 2), phi(-2) = 1, phi(-1) = 2, phi(0) = 3
        let model = scalar(TimeKind::Discrete, 0.0, 1.0);
        let phi = History::Table {
            times: vec![-2.0, -1.0, 0.0],
            states: vec![vec![1.0], vec![2.0], vec![3.0]],
        };
        let traj =
            simulate_discrete(&model, &[DelayModel::ConstantDiscrete { d: 2 }], &phi, 6).unwrap();
        let xs: Vec<f64> = traj.states.iter().map(|x| x[0]).collect();
        assert_eq!(xs, vec![3.0, 1.0, 2.0, 3.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn continuous_blow_up() {
        let model = scalar(TimeKind::Continuous, 1.0, 0.0);
        let f = PolyVectorField::new(1, vec![vec![Monomial::new(1.0, vec![3])]]).unwrap();
        let cubic =
            SystemModel::new(TimeKind::Continuous, f, vec![], Dilation::standard(1), 2.0).unwrap();
        match simulate_continuous(&cubic, &[], &History::Constant(vec![1.0]), 0.01, 10.0) {
            Err(Error::Diverged { time, trajectory }) => {
                assert!(time > 0.4 && time < 1.0, "{time}");
                assert!(trajectory.states.iter().flatten().all(|x| x.is_finite()));
            }
            other => panic!("expected divergence, got {other:?}"),
        }
        assert!(simulate_continuous(
            &model,
            &[DelayModel::Constant { tau: 0.0 }],
            &History::Constant(vec![1.0]),
            0.01,
            1.0
        )
        .is_ok());
    }

    #[test]
    fn kind_and_parameter_checks() {
        let c = scalar(TimeKind::Continuous, -1.0, 0.5);
        let d = scalar(TimeKind::Discrete, 0.5, 0.1);
        let phi = History::Constant(vec![1.0]);
        assert!(
            simulate_continuous(&d, &[DelayModel::Constant { tau: 1.0 }], &phi, 0.1, 1.0).is_err()
        );
        assert!(simulate_discrete(&c, &[DelayModel::ConstantDiscrete { d: 1 }], &phi, 5).is_err());
        assert!(
            simulate_continuous(&c, &[DelayModel::ConstantDiscrete { d: 1 }], &phi, 0.1, 1.0)
                .is_err()
        );
        assert!(
            simulate_continuous(&c, &[DelayModel::Constant { tau: 1.0 }], &phi, 0.0, 1.0).is_err()
        );
        assert!(simulate_continuous(
            &c,
            &vec![DelayModel::Constant { tau: 1.0 }; 2],
            &phi,
            0.1,
            1.0
        )
        .is_err());
        assert!(simulate_discrete(&d, &[DelayModel::ConstantDiscrete { d: 1 }], &phi, 0).is_err());
    }

    #[test]
    fn envelope_examples() {
        let model = scalar(TimeKind::Continuous, -1.0, 0.0);
        let traj = simulate_continuous(
            &model,
            &[DelayModel::Constant { tau: 0.0 }],
            &History::Constant(vec![1.0]),
            1e-3,
            10.0,
        )
        .unwrap();
        let d = Dilation::standard(1);
        let ok = envelope_check(&traj, &exponential(0.9), &[1.0], &d, 0.5).unwrap();
        assert!(ok.holds);
        assert_relative_eq!(ok.m_fit, 1.0, epsilon = 1e-9);
        let bad = envelope_check(&traj, &exponential(1.1), &[1.0], &d, 0.5).unwrap();
        assert!(!bad.holds);
        assert!(bad.worst_ratio_tail > 1.5);
        assert!(envelope_check(&traj, &exponential(0.9), &[1.0], &d, 1.0).is_err());
    }

    #[test]
    fn level_sets_on_exponential() {
        let model = scalar(TimeKind::Continuous, -1.0, 0.0);
        let traj = simulate_continuous(
            &model,
            &[DelayModel::Constant { tau: 0.0 }],
            &History::Constant(vec![1.0]),
            1e-2,
            10.0,
        )
        .unwrap();
        let d = Dilation::standard(1);
        let entries = level_set_descent(&traj, &[1.0], &d, 0.5, 1.0).unwrap();
        // e^{-t} <= 2^{-m} from t = m ln 2 on
        assert_eq!(entries.len(), 15);
        for (m, t) in entries.iter().enumerate() {
            assert!((t - m as f64 * 2f64.ln()).abs() <= 0.01 + 1e-9, "{m} {t}");
        }
        assert_eq!(
            level_set_descent(&traj, &[1.0], &d, 0.0, 1.0).unwrap(),
            vec![0.0]
        );

        let grow = scalar(TimeKind::Continuous, 1.0, 0.0);
        let traj = simulate_continuous(
            &grow,
            &[DelayModel::Constant { tau: 0.0 }],
            &History::Constant(vec![1.0]),
            1e-2,
            1.0,
        )
        .unwrap();
        assert!(level_set_descent(&traj, &[1.0], &d, 0.9, 1.0)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn csv_format() {
        let model = scalar(TimeKind::Discrete, 0.5, 0.0);
        let traj = simulate_discrete(
            &model,
            &[DelayModel::ConstantDiscrete { d: 0 }],
            &History::Constant(vec![1.0]),
            2,
        )
        .unwrap();
        let lyap = Lyapunov::new(&[1.0], &Dilation::standard(1)).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf, Some(&lyap), Some(&exponential(0.5)))
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x_1,V,bound");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[2].split(',').next().unwrap(), "1.0000000000000000e0");
        let back: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(back, 0.5);
    }
}
