//! Checks of the standing hypotheses: homogeneity, cooperativity,
//! monotonicity, the positivity condition and the delay assumptions.
//!
//! Polynomial checks first try a coefficient-level argument, which is a
//! proof. When that is inconclusive they fall back to a sample grid on the
//! nonnegative orthant: a negative value is a counterexample, while the
//! absence of one only yields `Undetermined` with `Sampled` evidence.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{Dilation, Monomial, PolyVectorField, Polynomial, SystemModel, TimeKind};
use crate::simulate::{DelayModel, DelayStructure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Undetermined,
    Fail,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    /// Coefficient-level or closed-form argument.
    Exact,
    /// Evaluation on a finite sample.
    Sampled,
}

/// Data that demonstrates a failed hypothesis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    /// A monomial whose weighted degree is not `p + r_i`.
    Term {
        component: usize,
        term: Monomial,
        weighted_degree: f64,
        expected: f64,
    },
    /// A point where the checked quantity is negative. `variable` names the
    /// Jacobian column when the quantity is a partial derivative.
    Point {
        component: usize,
        variable: Option<usize>,
        x: Vec<f64>,
        value: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub verdict: Verdict,
    pub evidence: Evidence,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub detail: String,
}

impl HypothesisCheck {
    fn pass(evidence: Evidence, detail: impl Into<String>) -> Self {
        HypothesisCheck {
            verdict: Verdict::Pass,
            evidence,
            witness: None,
            detail: detail.into(),
        }
    }

    fn fail(evidence: Evidence, witness: Witness, detail: impl Into<String>) -> Self {
        HypothesisCheck {
            verdict: Verdict::Fail,
            evidence,
            witness: Some(witness),
            detail: detail.into(),
        }
    }

    fn undetermined(detail: impl Into<String>) -> Self {
        HypothesisCheck {
            verdict: Verdict::Undetermined,
            evidence: Evidence::Sampled,
            witness: None,
            detail: detail.into(),
        }
    }
}

/// Verdicts of the delay hypotheses for one delay model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayAssumptionReport {
    /// `t - tau(t) -> infinity`.
    pub argument_unbounded: Verdict,
    /// `sup_{t > T} tau(t) / t = alpha < 1`.
    pub ratio_below_one: Verdict,
    pub evidence: Evidence,
    pub alpha: Option<f64>,
    pub tau_sup: Option<f64>,
    pub history_depth: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub checks: BTreeMap<String, HypothesisCheck>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub delays: Vec<DelayAssumptionReport>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl HypothesisReport {
    /// Worst verdict over all checks (`Fail` > `Undetermined` > `Pass`).
    pub fn overall(&self) -> Verdict {
        let checks = self.checks.values().map(|c| c.verdict);
        let delays = self.delays.iter().map(|d| d.argument_unbounded);
        checks.chain(delays).max().unwrap_or(Verdict::Pass)
    }
}

/// Sample grid on the nonnegative orthant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSpec {
    pub points_per_axis: usize,
    pub lo: f64,
    pub hi: f64,
    /// Upper bound on the interior grid size. Larger tensor grids are
    /// replaced by this many log-uniform random points.
    pub max_points: usize,
    pub seed: u64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec {
            points_per_axis: 200,
            lo: 1e-3,
            hi: 1e3,
            max_points: 40_000,
            seed: 0,
        }
    }
}

impl SampleSpec {
    /// Basis vectors, the all-ones vector, scaled basis rays and the
    /// interior grid, in that order.
    pub fn points(&self, n: usize) -> Vec<Vec<f64>> {
        let k = self.points_per_axis.max(2);
        let (llo, lhi) = (self.lo.ln(), self.hi.ln());
        let axis: Vec<f64> = (0..k)
            .map(|j| (llo + (lhi - llo) * j as f64 / (k - 1) as f64).exp())
            .collect();

        let mut pts = Vec::new();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            pts.push(e);
        }
        pts.push(vec![1.0; n]);
        for j in 0..n {
            for &a in &axis {
                let mut e = vec![0.0; n];
                e[j] = a;
                pts.push(e);
            }
        }

        let full = (k as f64).powi(n as i32);
        if full <= self.max_points as f64 {
            let mut idx = vec![0usize; n];
            loop {
                pts.push(idx.iter().map(|&i| axis[i]).collect());
                let mut d = 0;
                while d < n {
                    idx[d] += 1;
                    if idx[d] < k {
                        break;
                    }
                    idx[d] = 0;
                    d += 1;
                }
                if d == n {
                    break;
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            for _ in 0..self.max_points {
                pts.push((0..n).map(|_| rng.gen_range(llo..=lhi).exp()).collect());
            }
        }
        pts
    }
}

/// First sample point where `p` is negative beyond rounding, if any.
fn find_negative<'a>(p: &Polynomial, points: &'a [Vec<f64>]) -> Option<(&'a [f64], f64)> {
    points.iter().find_map(|x| {
        let value = p.eval(x);
        (value < -1e-12 * (1.0 + p.abs_eval(x))).then_some((x.as_slice(), value))
    })
}

/// Nonnegativity of a set of polynomial entries on the orthant.
/// `entries` yields `(component, variable, polynomial)`.
fn check_entries_nonnegative(
    entries: Vec<(usize, Option<usize>, Polynomial)>,
    sample: &SampleSpec,
    what: &str,
) -> HypothesisCheck {
    let doubtful: Vec<_> = entries
        .into_iter()
        .filter(|(_, _, p)| !p.has_nonnegative_coeffs())
        .collect();
    if doubtful.is_empty() {
        return HypothesisCheck::pass(
            Evidence::Exact,
            format!("{what}: all coefficients nonnegative"),
        );
    }
    let n = doubtful[0].2.n();
    let points = sample.points(n);
    for (component, variable, p) in &doubtful {
        if let Some((x, value)) = find_negative(p, &points) {
            return HypothesisCheck::fail(
                Evidence::Sampled,
                Witness::Point {
                    component: *component,
                    variable: *variable,
                    x: x.to_vec(),
                    value,
                },
                format!("{what}: negative value found"),
            );
        }
    }
    HypothesisCheck::undetermined(format!(
        "{what}: {} entries with negative coefficients, no violation on {} samples",
        doubtful.len(),
        points.len()
    ))
}

/// Exact test: every monomial of component `i` has weighted degree
/// `sum_l e_l r_l = p + r_i`.
pub fn check_homogeneity(field: &PolyVectorField, dilation: &Dilation, p: f64) -> HypothesisCheck {
    if dilation.n() != field.n() {
        return HypothesisCheck::undetermined(format!(
            "dilation has {} exponents for a field of dimension {}",
            dilation.n(),
            field.n()
        ));
    }
    let r = dilation.r();
    for (i, comp) in field.components().iter().enumerate() {
        let expected = p + r[i];
        for term in comp.terms() {
            let wd = term.weighted_degree(r);
            if (wd - expected).abs() > 1e-9 * expected.abs().max(1.0) {
                return HypothesisCheck::fail(
                    Evidence::Exact,
                    Witness::Term {
                        component: i,
                        term: term.clone(),
                        weighted_degree: wd,
                        expected,
                    },
                    format!("not homogeneous of degree {p}"),
                );
            }
        }
    }
    HypothesisCheck::pass(Evidence::Exact, format!("homogeneous of degree {p}"))
}

/// Off-diagonal Jacobian entries nonnegative on the orthant (Metzler).
pub fn check_cooperative(field: &PolyVectorField, sample: &SampleSpec) -> HypothesisCheck {
    let entries = field
        .jacobian()
        .into_iter()
        .enumerate()
        .flat_map(|(i, row)| {
            row.into_iter()
                .enumerate()
                .filter(move |(j, _)| *j != i)
                .map(move |(j, p)| (i, Some(j), p))
        })
        .collect();
    check_entries_nonnegative(entries, sample, "off-diagonal Jacobian entries")
}

/// Every Jacobian entry nonnegative on the orthant.
pub fn check_nondecreasing(field: &PolyVectorField, sample: &SampleSpec) -> HypothesisCheck {
    let entries = field
        .jacobian()
        .into_iter()
        .enumerate()
        .flat_map(|(i, row)| {
            row.into_iter()
                .enumerate()
                .map(move |(j, p)| (i, Some(j), p))
        })
        .collect();
    check_entries_nonnegative(entries, sample, "Jacobian entries")
}

/// Sufficient positivity condition.
///
/// Continuous: every `g_q >= 0` on the orthant and `f_i >= 0` on the face
/// `x_i = 0`. Discrete: `f >= 0` and every `g_q >= 0` on the orthant.
pub fn check_positivity_condition(model: &SystemModel, sample: &SampleSpec) -> HypothesisCheck {
    let mut entries = Vec::new();
    for g in model.delayed() {
        for (i, p) in g.components().iter().enumerate() {
            entries.push((i, None, p.clone()));
        }
    }
    let face = model.kind() == TimeKind::Continuous;
    for (i, p) in model.f().components().iter().enumerate() {
        let p = if face { p.restrict_zero(i) } else { p.clone() };
        entries.push((i, None, p));
    }
    let what = if face {
        "g >= 0 on the orthant and f_i >= 0 on {x_i = 0}"
    } else {
        "f >= 0 and g >= 0 on the orthant"
    };
    check_entries_nonnegative(entries, sample, what)
}

/// Delay hypotheses from the model's declared structure.
pub fn check_delay_assumption(delay: &DelayModel, horizon: f64) -> Result<DelayAssumptionReport> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid(
            "horizon",
            format!("must be positive, got {horizon}"),
        ));
    }
    let history_depth = delay.history_depth()?;
    let (ratio_below_one, alpha) = match delay.structure() {
        DelayStructure::Proportional { alpha } => (Verdict::Pass, Some(alpha)),
        DelayStructure::Bounded { .. } => {
            let est = late_ratio_sup(&|t| delay.tau(t), horizon / 2.0, horizon);
            (Verdict::Pass, (est < 1.0).then_some(est))
        }
        DelayStructure::Unbounded => (Verdict::Fail, None),
    };
    Ok(DelayAssumptionReport {
        argument_unbounded: Verdict::Pass,
        ratio_below_one,
        evidence: Evidence::Exact,
        alpha,
        tau_sup: delay.sup(),
        history_depth,
    })
}

/// Empirical delay hypotheses for an arbitrary delay function, sampled on a
/// mixed linear/log-spaced grid over `[0, horizon]`.
pub fn sample_delay_assumption(
    tau: &dyn Fn(f64) -> f64,
    horizon: f64,
) -> Result<DelayAssumptionReport> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid(
            "horizon",
            format!("must be positive, got {horizon}"),
        ));
    }
    let mut grid: Vec<f64> = (0..=2000)
        .map(|j| horizon.min(100.0) * j as f64 / 2000.0)
        .chain((0..2000).map(|j| {
            let lo = (1e-3f64).ln();
            (lo + (horizon.ln() - lo) * j as f64 / 1999.0).exp()
        }))
        .filter(|&t| t <= horizon)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let lag: Vec<f64> = grid.iter().map(|&t| t - tau(t)).collect();
    let history_depth = (-lag.iter().copied().fold(f64::INFINITY, f64::min)).max(0.0);

    // suffix minimum of t - tau(t)
    let mut suffix = lag.clone();
    for j in (0..suffix.len().saturating_sub(1)).rev() {
        suffix[j] = suffix[j].min(suffix[j + 1]);
    }
    let at = |t: f64| suffix[grid.partition_point(|&g| g < t).min(grid.len() - 1)];
    let (m1, m2, m3) = (at(horizon / 100.0), at(horizon / 10.0), at(horizon / 2.0));
    let argument_unbounded = if m1 < m2 && m2 < m3 && m3 > 0.0 {
        Verdict::Pass
    } else {
        Verdict::Undetermined
    };

    let late = late_ratio_sup(tau, horizon / 2.0, horizon);
    let early = late_ratio_sup(tau, horizon / 20.0, horizon / 10.0);
    let (ratio_below_one, alpha) = if late < 1.0 && late <= early + 1e-9 {
        (Verdict::Pass, Some(late))
    } else {
        (Verdict::Undetermined, None)
    };

    let split = grid.partition_point(|&t| t < horizon / 2.0);
    let sup_all = grid.iter().map(|&t| tau(t)).fold(0.0, f64::max);
    let sup_late = grid[split..].iter().map(|&t| tau(t)).fold(0.0, f64::max);
    let sup_early = grid[..split].iter().map(|&t| tau(t)).fold(0.0, f64::max);
    let tau_sup = (sup_late <= sup_early * (1.0 + 1e-9) + 1e-12).then_some(sup_all);

    Ok(DelayAssumptionReport {
        argument_unbounded,
        ratio_below_one,
        evidence: Evidence::Sampled,
        alpha,
        tau_sup,
        history_depth,
    })
}

fn late_ratio_sup(tau: &dyn Fn(f64) -> f64, from: f64, to: f64) -> f64 {
    (0..=1000)
        .map(|j| from + (to - from) * j as f64 / 1000.0)
        .filter(|&t| t > 0.0)
        .map(|t| tau(t) / t)
        .fold(0.0, f64::max)
}

/// Runs every structural check for a model and its delays.
pub fn check_system(
    model: &SystemModel,
    delays: &[DelayModel],
    sample: &SampleSpec,
    horizon: f64,
) -> Result<HypothesisReport> {
    let mut report = HypothesisReport::default();
    let d = model.dilation();
    let p = model.degree();

    let origin =
        model.f().vanishes_at_origin() && model.delayed().iter().all(|g| g.vanishes_at_origin());
    report.checks.insert(
        "vanishes_at_origin".into(),
        if origin {
            HypothesisCheck::pass(Evidence::Exact, "no constant terms")
        } else {
            let (component, field) = std::iter::once(model.f())
                .chain(model.delayed())
                .find_map(|f| {
                    f.components()
                        .iter()
                        .position(|c| c.terms().iter().any(|t| t.total_degree() == 0))
                        .map(|i| (i, f))
                })
                .expect("some field has a constant term");
            let zero = vec![0.0; model.n()];
            HypothesisCheck::fail(
                Evidence::Exact,
                Witness::Point {
                    component,
                    variable: None,
                    value: field.eval(&zero).expect("dimension checked")[component],
                    x: zero,
                },
                "field does not vanish at the origin",
            )
        },
    );

    report
        .checks
        .insert("f.homogeneous".into(), check_homogeneity(model.f(), d, p));
    match model.kind() {
        TimeKind::Continuous => {
            report
                .checks
                .insert("f.cooperative".into(), check_cooperative(model.f(), sample));
        }
        TimeKind::Discrete => {
            report.checks.insert(
                "f.nondecreasing".into(),
                check_nondecreasing(model.f(), sample),
            );
            if p > 0.0 {
                report.notes.push(format!(
                    "degree {p} > 0: a certificate only implies local stability for initial conditions below v"
                ));
            }
        }
    }
    for (q, g) in model.delayed().iter().enumerate() {
        let name = format!("g{}", q + 1);
        report
            .checks
            .insert(format!("{name}.homogeneous"), check_homogeneity(g, d, p));
        report.checks.insert(
            format!("{name}.nondecreasing"),
            check_nondecreasing(g, sample),
        );
    }
    report.checks.insert(
        "positivity".into(),
        check_positivity_condition(model, sample),
    );

    for delay in delays {
        delay.validate()?;
        if delay.time_kind() != model.kind() {
            return Err(invalid(
                "delay",
                format!(
                    "{:?} delay used with a {:?} system",
                    delay.time_kind(),
                    model.kind()
                ),
            ));
        }
        report.delays.push(check_delay_assumption(delay, horizon)?);
    }
    Ok(report)
}
