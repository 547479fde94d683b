//! Guaranteed decay rates from a certificate `v`.
//!
//! With `a_i = f_i(v) / v_i`, `b_i = sum_q g_{q,i}(v) / v_i` and
//! `c_i = r_max / r_i`:
//!
//! ```text
//! eta_i:    c_i (a_i + exp(eta tau_sup / c_i) b_i) + eta = 0        (p = 0)
//! theta_i:  -(p / r_i)(a_i + b_i)                                   (p > 0)
//! xi_i:     a_i + (1 / (1 - alpha))^(xi / c_i) b_i = 0  (or = 1 in discrete time)
//! beta_i:   ln(-a_i / b_i) / ((1 + r_i / p) ln(1 / (1 - alpha)))
//! ```
//!
//! The returned rate is the minimum over components, shrunk by a safety
//! factor so that it lies strictly inside the admissible interval.

use serde::{Deserialize, Serialize};

use crate::certify::{verify_certificate, DEFAULT_TOLERANCE};
use crate::error::{invalid, Error, Result};
use crate::model::{SystemModel, TimeKind};
use crate::simulate::{DelayModel, DelayStructure};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateOptions {
    /// Returned rates are `(1 - safety)` times the supremum.
    pub safety: f64,
    pub root_tol: f64,
    pub certificate_tol: f64,
}

impl Default for RateOptions {
    fn default() -> Self {
        RateOptions {
            safety: 1e-6,
            root_tol: 1e-12,
            certificate_tol: DEFAULT_TOLERANCE,
        }
    }
}

/// Shape of a decay envelope `1 / mu(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum DecayForm {
    /// `exp(-eta t)`.
    Exponential { eta: f64 },
    /// `(theta t + 1)^(-exponent)`.
    PolynomialReciprocal { theta: f64, exponent: f64 },
    /// `(1 + t)^(-exponent)`.
    PowerRate { exponent: f64 },
}

/// A guaranteed envelope for `W(t) = max_i (x_i / v_i)^(r_max / r_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayBound {
    pub form: DecayForm,
    /// The selected rate parameter (`eta`, `theta`, `xi` or `beta`).
    pub rate: f64,
    /// `r_max / r_i`.
    pub component_exponents: Vec<f64>,
    /// Per-component suprema; `None` when a component imposes no limit.
    pub component_rates: Vec<Option<f64>>,
    /// Fitted after simulation; not part of the guarantee.
    pub envelope_constant: Option<f64>,
}

impl DecayBound {
    pub fn new(
        form: DecayForm,
        rate: f64,
        component_exponents: Vec<f64>,
        component_rates: Vec<Option<f64>>,
    ) -> Self {
        DecayBound {
            form,
            rate,
            component_exponents,
            component_rates,
            envelope_constant: None,
        }
    }

    /// `mu(t)`: positive, non-decreasing, unbounded.
    pub fn mu(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self.form {
            DecayForm::Exponential { eta } => (eta * t).exp(),
            DecayForm::PolynomialReciprocal { theta, exponent } => (theta * t + 1.0).powf(exponent),
            DecayForm::PowerRate { exponent } => (1.0 + t).powf(exponent),
        }
    }

    /// `1 / mu(t)`, scaled by the envelope constant when one is set.
    pub fn evaluate(&self, t: f64) -> f64 {
        self.envelope_constant.unwrap_or(1.0) / self.mu(t)
    }

    /// Components that impose no limit on the rate.
    pub fn unbounded_components(&self) -> Vec<usize> {
        self.component_rates
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.is_none().then_some(i))
            .collect()
    }
}

/// Positive root of a strictly increasing `f` with `f(0) < 0`.
///
/// Doubles `bracket_hint` until the sign changes, checks monotonicity on
/// 100 points of the bracket, then bisects until `|f| <= tol` or the
/// bracket cannot shrink further.
pub fn solve_monotone(f: impl Fn(f64) -> f64, bracket_hint: f64, tol: f64) -> Result<f64> {
    if !(bracket_hint > 0.0 && bracket_hint.is_finite()) {
        return Err(invalid(
            "bracket_hint",
            format!("must be positive, got {bracket_hint}"),
        ));
    }
    if !(tol > 0.0) {
        return Err(invalid("tol", format!("must be positive, got {tol}")));
    }
    let f0 = f(0.0);
    if !(f0 < 0.0) {
        return Err(Error::Root(format!("f(0) = {f0} is not negative")));
    }
    let mut hi = bracket_hint;
    let mut doublings = 0;
    while !(f(hi) >= 0.0) {
        doublings += 1;
        if doublings > 60 {
            return Err(Error::Root(format!("no sign change up to {hi}")));
        }
        hi *= 2.0;
    }
    let samples: Vec<f64> = (0..100).map(|k| f(hi * k as f64 / 99.0)).collect();
    if samples.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Root(
            "function is not strictly increasing on the bracket".into(),
        ));
    }

    let mut lo = 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() <= tol {
            return Ok(mid);
        }
        if mid <= lo || mid >= hi {
            break;
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if f(lo).abs() <= f(hi).abs() { lo } else { hi })
}

struct Ratios {
    a: Vec<f64>,
    b: Vec<f64>,
    /// `r_max / r_i`.
    c: Vec<f64>,
    r: Vec<f64>,
}

fn ratios(model: &SystemModel, v: &[f64], opts: &RateOptions) -> Result<Ratios> {
    let cert = verify_certificate(model, v, opts.certificate_tol)?;
    if !cert.valid {
        return Err(Error::InvalidCertificate(format!(
            "margins {:?}",
            cert.margins
        )));
    }
    let f = model.eval_f(v)?;
    let g = model.eval_delayed_sum(v)?;
    Ok(Ratios {
        a: f.iter().zip(v).map(|(fi, vi)| fi / vi).collect(),
        b: g.iter().zip(v).map(|(gi, vi)| gi / vi).collect(),
        c: model.dilation().component_exponents(),
        r: model.dilation().r().to_vec(),
    })
}

fn check_options(opts: &RateOptions) -> Result<()> {
    if !(0.0..1.0).contains(&opts.safety) {
        return Err(invalid(
            "safety",
            format!("must lie in [0, 1), got {}", opts.safety),
        ));
    }
    Ok(())
}

fn require_degree(model: &SystemModel, positive: bool) -> Result<()> {
    let p = model.degree();
    match (positive, p > 0.0) {
        (true, false) => Err(Error::Hypothesis(format!(
            "this rate needs degree p > 0, got {p}"
        ))),
        (false, true) => Err(Error::Hypothesis(format!(
            "this rate needs degree p = 0, got {p}"
        ))),
        _ => Ok(()),
    }
}

fn require_continuous(model: &SystemModel) -> Result<()> {
    if model.kind() != TimeKind::Continuous {
        return Err(Error::Hypothesis(
            "this rate applies to continuous-time systems".into(),
        ));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(invalid("alpha", format!("must lie in [0, 1), got {alpha}")));
    }
    Ok(())
}

fn check_tau(tau_sup: f64) -> Result<()> {
    if !(tau_sup >= 0.0 && tau_sup.is_finite()) {
        return Err(invalid(
            "tau_sup",
            format!("must be finite and >= 0, got {tau_sup}"),
        ));
    }
    Ok(())
}

fn min_finite(rates: &[Option<f64>]) -> Option<f64> {
    rates.iter().flatten().copied().reduce(f64::min)
}

/// Exponential rate for degree-zero systems with delays bounded by `tau_sup`.
pub fn eta_bound(
    model: &SystemModel,
    v: &[f64],
    tau_sup: f64,
    opts: &RateOptions,
) -> Result<DecayBound> {
    check_options(opts)?;
    check_tau(tau_sup)?;
    require_continuous(model)?;
    require_degree(model, false)?;
    let q = ratios(model, v, opts)?;
    let mut rates = Vec::with_capacity(v.len());
    for i in 0..v.len() {
        let (a, b, c) = (q.a[i], q.b[i], q.c[i]);
        let eta_i = if b == 0.0 || tau_sup == 0.0 {
            -c * (a + b)
        } else {
            let res = |eta: f64| c * (a + (eta * tau_sup / c).exp() * b) + eta;
            solve_monotone(res, (-c * a).max(1e-3), opts.root_tol)?
        };
        rates.push(Some(eta_i));
    }
    let eta = (1.0 - opts.safety) * min_finite(&rates).expect("at least one component");
    Ok(DecayBound::new(
        DecayForm::Exponential { eta },
        eta,
        q.c,
        rates,
    ))
}

/// Polynomial-reciprocal rate `theta` for positive-degree systems with
/// delays bounded by `tau_sup`.
pub fn theta_bound(
    model: &SystemModel,
    v: &[f64],
    tau_sup: f64,
    opts: &RateOptions,
) -> Result<DecayBound> {
    check_options(opts)?;
    check_tau(tau_sup)?;
    require_continuous(model)?;
    require_degree(model, true)?;
    let p = model.degree();
    let q = ratios(model, v, opts)?;
    let rates: Vec<Option<f64>> = (0..v.len())
        .map(|i| Some(-(p / q.r[i]) * (q.a[i] + q.b[i])))
        .collect();
    let cap = if tau_sup > 0.0 {
        1.0 / tau_sup
    } else {
        f64::INFINITY
    };
    let theta = (1.0 - opts.safety) * cap.min(min_finite(&rates).expect("at least one component"));
    let exponent = model.dilation().r_max() / p;
    Ok(DecayBound::new(
        DecayForm::PolynomialReciprocal { theta, exponent },
        theta,
        q.c,
        rates,
    ))
}

/// Power rate `xi` for degree-zero systems with proportional delays of
/// ratio `alpha`.
pub fn xi_bound(
    model: &SystemModel,
    v: &[f64],
    alpha: f64,
    opts: &RateOptions,
) -> Result<DecayBound> {
    check_options(opts)?;
    check_alpha(alpha)?;
    require_degree(model, false)?;
    let q = ratios(model, v, opts)?;
    let rhs = match model.kind() {
        TimeKind::Continuous => 0.0,
        TimeKind::Discrete => 1.0,
    };
    let base = 1.0 / (1.0 - alpha);
    let mut rates = Vec::with_capacity(v.len());
    for i in 0..v.len() {
        let (a, b, c) = (q.a[i] - rhs, q.b[i], q.c[i]);
        if b == 0.0 || alpha == 0.0 {
            rates.push(None);
            continue;
        }
        let res = |xi: f64| a + base.powf(xi / c) * b;
        // base^(xi/c) = -a/b at the root
        let hint = (c * (-a / b).ln() / base.ln()).max(1e-3);
        rates.push(Some(solve_monotone(res, hint, opts.root_tol)?));
    }
    let xi = min_finite(&rates)
        .ok_or_else(|| Error::NoFiniteRate("every component has an unbounded rate".into()))?
        * (1.0 - opts.safety);
    Ok(DecayBound::new(
        DecayForm::PowerRate { exponent: xi },
        xi,
        q.c,
        rates,
    ))
}

/// Power rate for positive-degree continuous systems with proportional
/// delays: the largest `beta in (0, 1]` allowed by every component, giving
/// the envelope exponent `(r_max / p) beta`.
pub fn beta_bound(
    model: &SystemModel,
    v: &[f64],
    alpha: f64,
    opts: &RateOptions,
) -> Result<DecayBound> {
    check_options(opts)?;
    check_alpha(alpha)?;
    require_continuous(model)?;
    require_degree(model, true)?;
    let p = model.degree();
    let q = ratios(model, v, opts)?;
    let log_base = -(-alpha).ln_1p();
    let rates: Vec<Option<f64>> = (0..v.len())
        .map(|i| {
            (q.b[i] != 0.0 && alpha > 0.0)
                .then(|| (-q.a[i] / q.b[i]).ln() / ((1.0 + q.r[i] / p) * log_base))
        })
        .collect();
    let beta = (1.0 - opts.safety) * min_finite(&rates).map_or(1.0, |m| m.min(1.0));
    if !(beta > 0.0) {
        return Err(Error::NoFiniteRate(format!(
            "no feasible beta for alpha = {alpha}"
        )));
    }
    let exponent = model.dilation().r_max() / p * beta;
    Ok(DecayBound::new(
        DecayForm::PowerRate { exponent },
        beta,
        q.c,
        rates,
    ))
}

/// A rate function `mu` together with the limits its stability condition
/// needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MuSpec {
    /// `exp(eta t)`.
    Exponential { eta: f64 },
    /// `t^xi`.
    PowerRate { xi: f64 },
    /// `(theta t + 1)^exponent`.
    PolynomialReciprocal { theta: f64, exponent: f64 },
    /// Limits supplied by the caller.
    Declared {
        /// `mu(t) / mu(t - tau(t))`, or `mu(k + 1) / mu(k - d(k))`.
        ratio_limit: Option<f64>,
        /// `mu(k + 1) / mu(k)` (discrete time only).
        step_ratio_limit: Option<f64>,
        /// `mu'(t) / mu(t)^(1 - p / r_max)` (continuous time only).
        derivative_ratio_limit: Option<f64>,
    },
}

enum Growth {
    Bounded(f64),
    Proportional(f64),
    Unbounded,
}

fn growth(delay: &DelayModel) -> Growth {
    match delay.structure() {
        DelayStructure::Bounded { sup } => Growth::Bounded(sup),
        DelayStructure::Proportional { alpha } => Growth::Proportional(alpha),
        DelayStructure::Unbounded => Growth::Unbounded,
    }
}

/// Limit of `c t^(s - 1)` as `t -> infinity`, where `at_one` is the
/// value of `c` for `s = 1`.
fn power_limit(s: f64, at_one: f64) -> f64 {
    if (s - 1.0).abs() <= 1e-12 {
        at_one
    } else if s < 1.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// `L^e b` with the convention `inf^e * 0 = 0`.
fn weighted(l: f64, e: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        l.powf(e) * b
    }
}

/// Evaluates the generic `mu`-stability condition for every component.
///
/// Continuous: `c_i (a_i + L^((r_i + p) / r_max) b_i) + D < 0` with `L` the
/// delay ratio limit of `mu` and `D` its derivative ratio limit.
/// Discrete: `R1^(r_i / r_max) a_i + R2^(r_i / r_max) b_i < 1` with the
/// one-step and delayed ratio limits.
pub fn mu_condition_check(
    model: &SystemModel,
    v: &[f64],
    mu: &MuSpec,
    delay: &DelayModel,
) -> Result<bool> {
    delay.validate()?;
    if delay.time_kind() != model.kind() {
        return Err(invalid("delay", "delay and system time kinds differ"));
    }
    let q = ratios(model, v, &RateOptions::default())?;
    let p = model.degree();
    let r_max = model.dilation().r_max();
    let g = growth(delay);
    let missing = |what: &str| Error::MissingLimit(format!("{what} must be declared"));

    match model.kind() {
        TimeKind::Continuous => {
            let qd = p / r_max;
            let (l, d) = match *mu {
                MuSpec::Exponential { eta } => {
                    let l = match g {
                        Growth::Bounded(sup) => (eta * sup).exp(),
                        _ => f64::INFINITY,
                    };
                    (l, if p == 0.0 { eta } else { f64::INFINITY })
                }
                MuSpec::PowerRate { xi } => {
                    let l = match g {
                        Growth::Bounded(_) => 1.0,
                        Growth::Proportional(alpha) => (1.0 / (1.0 - alpha)).powf(xi),
                        Growth::Unbounded => f64::INFINITY,
                    };
                    (l, power_limit(xi * qd, xi))
                }
                MuSpec::PolynomialReciprocal { theta, exponent } => {
                    let l = match g {
                        Growth::Bounded(_) => 1.0,
                        Growth::Proportional(alpha) => (1.0 / (1.0 - alpha)).powf(exponent),
                        Growth::Unbounded => f64::INFINITY,
                    };
                    (l, power_limit(exponent * qd, exponent * theta))
                }
                MuSpec::Declared {
                    ratio_limit,
                    derivative_ratio_limit,
                    ..
                } => (
                    ratio_limit.ok_or_else(|| missing("ratio_limit"))?,
                    derivative_ratio_limit.ok_or_else(|| missing("derivative_ratio_limit"))?,
                ),
            };
            Ok((0..v.len()).all(|i| {
                let e = (q.r[i] + p) / r_max;
                q.c[i] * (q.a[i] + weighted(l, e, q.b[i])) + d < 0.0
            }))
        }
        TimeKind::Discrete => {
            let (r1, r2) = match *mu {
                MuSpec::Exponential { eta } => {
                    let r2 = match g {
                        Growth::Bounded(sup) => (eta * (1.0 + sup)).exp(),
                        _ => f64::INFINITY,
                    };
                    (eta.exp(), r2)
                }
                MuSpec::PowerRate { xi: k } | MuSpec::PolynomialReciprocal { exponent: k, .. } => {
                    let r2 = match g {
                        Growth::Bounded(_) => 1.0,
                        Growth::Proportional(alpha) => (1.0 / (1.0 - alpha)).powf(k),
                        Growth::Unbounded => f64::INFINITY,
                    };
                    (1.0, r2)
                }
                MuSpec::Declared {
                    ratio_limit,
                    step_ratio_limit,
                    ..
                } => (
                    step_ratio_limit.ok_or_else(|| missing("step_ratio_limit"))?,
                    ratio_limit.ok_or_else(|| missing("ratio_limit"))?,
                ),
            };
            Ok((0..v.len()).all(|i| {
                let e = 1.0 / q.c[i];
                weighted(r1, e, q.a[i]) + weighted(r2, e, q.b[i]) < 1.0
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Dilation, Monomial, PolyVectorField};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn scalar(kind: TimeKind, a: f64, b: f64) -> SystemModel {
        SystemModel::linear(kind, &[vec![a]], &[vec![vec![b]]]).unwrap()
    }

    fn example_system() -> SystemModel {
        let f = PolyVectorField::new(
            2,
            vec![
                vec![
                    Monomial::new(-5.0, vec![3, 0]),
                    Monomial::new(2.0, vec![1, 1]),
                ],
                vec![
                    Monomial::new(1.0, vec![2, 1]),
                    Monomial::new(-4.0, vec![0, 2]),
                ],
            ],
        )
        .unwrap();
        let g = PolyVectorField::new(
            2,
            vec![
                vec![Monomial::new(1.0, vec![1, 1])],
                vec![Monomial::new(2.0, vec![4, 0])],
            ],
        )
        .unwrap();
        SystemModel::new(
            TimeKind::Continuous,
            f,
            vec![g],
            Dilation::new(vec![1.0, 2.0]).unwrap(),
            2.0,
        )
        .unwrap()
    }

    /// Plain bisection on a fixed bracket.
    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn solver_examples() {
        let f = |x: f64| -1.0 + 0.5 * x.exp() + x;
        let root = solve_monotone(f, 1.0, 1e-12).unwrap();
        assert!(f(root).abs() <= 1e-12);
        assert_relative_eq!(root, bisect(f, 0.0, 1.0), epsilon = 1e-10);
        assert_relative_eq!(
            solve_monotone(|x| x - 2.0, 0.1, 1e-12).unwrap(),
            2.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            solve_monotone(|x| -1.0 + 0.5 * 2f64.powf(x), 1.0, 1e-12).unwrap(),
            1.0,
            epsilon = 1e-11
        );

        assert!(solve_monotone(|x| x + 1.0, 1.0, 1e-12).is_err());
        assert!(solve_monotone(|_| -1.0, 1.0, 1e-12).is_err());
        assert!(solve_monotone(|x| (x - 1.0).powi(2) - 0.5, 1.0, 1e-12).is_err());
        assert!(solve_monotone(|x| x - 1.0, 0.0, 1e-12).is_err());
    }

    #[test]
    fn eta_examples() {
        let opts = RateOptions::default();
        let m = scalar(TimeKind::Continuous, -1.0, 0.5);
        let b = eta_bound(&m, &[1.0], 1.0, &opts).unwrap();
        let oracle = bisect(|x| -1.0 + 0.5 * x.exp() + x, 0.0, 1.0);
        assert_relative_eq!(b.component_rates[0].unwrap(), oracle, epsilon = 1e-10);
        assert_relative_eq!(b.rate, oracle * (1.0 - 1e-6), epsilon = 1e-10);
        assert!((0.3148..=0.3150).contains(&b.rate));

        let b0 = eta_bound(&m, &[1.0], 0.0, &opts).unwrap();
        assert_relative_eq!(b0.component_rates[0].unwrap(), 0.5, epsilon = 1e-15);
        let free = scalar(TimeKind::Continuous, -2.0, 0.0);
        assert_eq!(
            eta_bound(&free, &[3.0], 4.0, &opts)
                .unwrap()
                .component_rates[0],
            Some(2.0)
        );

        assert!(eta_bound(&example_system(), &[1.0, 1.0], 5.0, &opts).is_err());
        assert!(eta_bound(&scalar(TimeKind::Discrete, 0.2, 0.3), &[1.0], 1.0, &opts).is_err());
        assert!(matches!(
            eta_bound(&scalar(TimeKind::Continuous, -1.0, 1.0), &[1.0], 1.0, &opts),
            Err(Error::InvalidCertificate(_))
        ));
    }

    #[test]
    fn theta_examples() {
        let opts = RateOptions::default();
        let b = theta_bound(&example_system(), &[1.0, 1.0], 5.0, &opts).unwrap();
        assert_eq!(b.component_rates, vec![Some(4.0), Some(1.0)]);
        assert_relative_eq!(b.rate, 0.2 * (1.0 - 1e-6), epsilon = 1e-15);
        assert_eq!(
            b.form,
            DecayForm::PolynomialReciprocal {
                theta: b.rate,
                exponent: 1.0
            }
        );
        assert_eq!(b.component_exponents, vec![2.0, 1.0]);

        let uncapped = theta_bound(&example_system(), &[1.0, 1.0], 0.0, &opts).unwrap();
        assert_relative_eq!(uncapped.rate, 1.0 - 1e-6, epsilon = 1e-15);

        // g = 0, f_i(v)/v_i = -1, r_i = p
        let f = PolyVectorField::new(1, vec![vec![Monomial::new(-1.0, vec![2])]]).unwrap();
        let m =
            SystemModel::new(TimeKind::Continuous, f, vec![], Dilation::standard(1), 1.0).unwrap();
        let b = theta_bound(&m, &[1.0], 0.0, &opts).unwrap();
        assert_eq!(b.component_rates, vec![Some(1.0)]);

        assert!(theta_bound(&scalar(TimeKind::Continuous, -1.0, 0.5), &[1.0], 1.0, &opts).is_err());
    }

    #[test]
    fn xi_examples() {
        let opts = RateOptions::default();
        let m = scalar(TimeKind::Continuous, -1.0, 0.5);
        let b = xi_bound(&m, &[1.0], 0.5, &opts).unwrap();
        assert_relative_eq!(b.component_rates[0].unwrap(), 1.0, epsilon = 1e-11);
        assert!(matches!(
            xi_bound(&m, &[1.0], 0.0, &opts),
            Err(Error::NoFiniteRate(_))
        ));
        assert!(xi_bound(&m, &[1.0], 1.0, &opts).is_err());

        let d = SystemModel::linear(
            TimeKind::Discrete,
            &[vec![0.3, 0.2], vec![0.1, 0.4]],
            &[vec![vec![0.1, 0.0], vec![0.2, 0.1]]],
        )
        .unwrap();
        let v = [35.0 / 12.0, 45.0 / 12.0];
        let b = xi_bound(&d, &v, 0.5, &opts).unwrap();
        for i in 0..2 {
            let av = [0.3 * v[0] + 0.2 * v[1], 0.1 * v[0] + 0.4 * v[1]][i] / v[i];
            let bv = [0.1 * v[0], 0.2 * v[0] + 0.1 * v[1]][i] / v[i];
            let oracle = bisect(|x| av + 2f64.powf(x) * bv - 1.0, 0.0, 20.0);
            assert_relative_eq!(b.component_rates[i].unwrap(), oracle, epsilon = 1e-10);
        }
    }

    #[test]
    fn beta_examples() {
        let opts = RateOptions::default();
        let b = beta_bound(&example_system(), &[1.0, 1.0], 0.5, &opts).unwrap();
        assert_relative_eq!(
            b.component_rates[0].unwrap(),
            3f64.log2() / 1.5,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            b.component_rates[1].unwrap(),
            1.5f64.log2() / 2.0,
            epsilon = 1e-14
        );
        assert!((b.rate - 1.5f64.log2() / 2.0).abs() <= 1e-6);
        assert_relative_eq!(b.rate, 0.2925, epsilon = 1e-4);

        let b0 = beta_bound(&example_system(), &[1.0, 1.0], 0.0, &opts).unwrap();
        assert_relative_eq!(b0.rate, 1.0 - 1e-6, epsilon = 1e-15);
        assert_eq!(b0.unbounded_components(), vec![0, 1]);

        let f = PolyVectorField::new(1, vec![vec![Monomial::new(-1.0, vec![2])]]).unwrap();
        let m =
            SystemModel::new(TimeKind::Continuous, f, vec![], Dilation::standard(1), 1.0).unwrap();
        assert_relative_eq!(
            beta_bound(&m, &[1.0], 0.5, &opts).unwrap().rate,
            1.0 - 1e-6,
            epsilon = 1e-15
        );
    }

    #[test]
    fn mu_condition_examples() {
        let m = scalar(TimeKind::Continuous, -1.0, 0.5);
        let delay = DelayModel::Constant { tau: 1.0 };
        assert!(mu_condition_check(&m, &[1.0], &MuSpec::Exponential { eta: 0.3 }, &delay).unwrap());
        assert!(
            !mu_condition_check(&m, &[1.0], &MuSpec::Exponential { eta: 0.35 }, &delay).unwrap()
        );
        assert!(!mu_condition_check(
            &m,
            &[1.0],
            &MuSpec::Exponential { eta: 0.3 },
            &DelayModel::LogLag
        )
        .unwrap());

        let prop = DelayModel::Proportional { alpha: 0.5 };
        assert!(mu_condition_check(&m, &[1.0], &MuSpec::PowerRate { xi: 0.99 }, &prop).unwrap());
        assert!(!mu_condition_check(&m, &[1.0], &MuSpec::PowerRate { xi: 1.01 }, &prop).unwrap());

        let declared = MuSpec::Declared {
            ratio_limit: Some(1.0),
            step_ratio_limit: None,
            derivative_ratio_limit: None,
        };
        assert!(matches!(
            mu_condition_check(&m, &[1.0], &declared, &delay),
            Err(Error::MissingLimit(_))
        ));
        let declared = MuSpec::Declared {
            ratio_limit: Some(1.0),
            step_ratio_limit: None,
            derivative_ratio_limit: Some(0.4),
        };
        assert!(mu_condition_check(&m, &[1.0], &declared, &delay).unwrap());
    }

    #[test]
    fn mu_condition_discrete() {
        let d = scalar(TimeKind::Discrete, 0.5, 0.25);
        let alt = DelayModel::AlternatingParity;
        // e^eta 0.5 + e^{2 eta} 0.25 < 1
        let root = bisect(|x| 0.5 * x.exp() + 0.25 * (2.0 * x).exp() - 1.0, 0.0, 5.0);
        assert!(
            mu_condition_check(&d, &[1.0], &MuSpec::Exponential { eta: 0.99 * root }, &alt)
                .unwrap()
        );
        assert!(
            !mu_condition_check(&d, &[1.0], &MuSpec::Exponential { eta: 1.01 * root }, &alt)
                .unwrap()
        );
        assert!(mu_condition_check(&d, &[1.0], &MuSpec::PowerRate { xi: 5.0 }, &alt).unwrap());
        let c = DelayModel::Constant { tau: 1.0 };
        assert!(mu_condition_check(&d, &[1.0], &MuSpec::PowerRate { xi: 1.0 }, &c).is_err());
    }

    #[test]
    fn rate_bounds_satisfy_the_mu_condition() {
        let s5 = example_system();
        let v = [1.0, 1.0];
        let opts = RateOptions::default();
        let bounded = DelayModel::BoundedSinusoidal { a: 4.0, b: 1.0 };
        let t = theta_bound(&s5, &v, 0.0, &opts).unwrap();
        let spec = |theta| MuSpec::PolynomialReciprocal {
            theta,
            exponent: 1.0,
        };
        assert!(mu_condition_check(&s5, &v, &spec(t.rate), &bounded).unwrap());
        assert!(!mu_condition_check(&s5, &v, &spec(t.rate * 1.05), &bounded).unwrap());

        let m = scalar(TimeKind::Continuous, -1.0, 0.5);
        let e = eta_bound(&m, &[1.0], 1.0, &opts).unwrap();
        let c = DelayModel::Constant { tau: 1.0 };
        assert!(mu_condition_check(&m, &[1.0], &MuSpec::Exponential { eta: e.rate }, &c).unwrap());
        assert!(
            !mu_condition_check(&m, &[1.0], &MuSpec::Exponential { eta: e.rate * 1.05 }, &c)
                .unwrap()
        );

        let prop = DelayModel::Proportional { alpha: 0.3 };
        let x = xi_bound(&m, &[1.0], 0.3, &opts).unwrap();
        assert!(mu_condition_check(&m, &[1.0], &MuSpec::PowerRate { xi: x.rate }, &prop).unwrap());
        assert!(
            !mu_condition_check(&m, &[1.0], &MuSpec::PowerRate { xi: x.rate * 1.05 }, &prop)
                .unwrap()
        );
    }

    #[test]
    fn decay_bound_shapes() {
        let b = DecayBound::new(
            DecayForm::PolynomialReciprocal {
                theta: 0.2,
                exponent: 1.0,
            },
            0.2,
            vec![2.0, 1.0],
            vec![],
        );
        assert_relative_eq!(b.evaluate(5.0), 0.5);
        let p = DecayBound::new(
            DecayForm::PowerRate { exponent: 2.0 },
            2.0,
            vec![1.0],
            vec![],
        );
        assert_eq!(p.evaluate(0.0), 1.0);
        assert_relative_eq!(p.evaluate(1.0), 0.25);
        let json = serde_json::to_value(&b).unwrap();
        assert_eq!(json["form"]["form"], "polynomial_reciprocal");
    }

    proptest! {
        #[test]
        fn eta_decreases_with_delay(tau in 0.01..10.0f64, bump in 0.01..5.0f64) {
            let m = scalar(TimeKind::Continuous, -1.0, 0.5);
            let opts = RateOptions::default();
            let short = eta_bound(&m, &[1.0], tau, &opts).unwrap().rate;
            let long = eta_bound(&m, &[1.0], tau + bump, &opts).unwrap().rate;
            prop_assert!(long < short);
        }

        #[test]
        fn xi_decreases_with_alpha(alpha in 0.01..0.9f64, bump in 0.01..0.09f64) {
            let m = scalar(TimeKind::Continuous, -1.0, 0.5);
            let opts = RateOptions::default();
            let lo = xi_bound(&m, &[1.0], alpha, &opts).unwrap().rate;
            let hi = xi_bound(&m, &[1.0], alpha + bump, &opts).unwrap().rate;
            prop_assert!(hi < lo);
        }

        #[test]
        fn beta_is_non_increasing(alpha in 0.0..0.9f64, bump in 0.0..0.09f64) {
            let opts = RateOptions::default();
            let lo = beta_bound(&example_system(), &[1.0, 1.0], alpha, &opts).unwrap().rate;
            let hi = beta_bound(&example_system(), &[1.0, 1.0], alpha + bump, &opts).unwrap().rate;
            prop_assert!(hi <= lo);
        }

        #[test]
        fn rate_residuals_are_increasing(a in -5.0..-0.5f64, frac in 0.05..0.95f64, tau in 0.1..5.0f64) {
            let b = -a * frac;
            let res = |eta: f64| a + (eta * tau).exp() * b + eta;
            let root = solve_monotone(res, 1.0, 1e-12).unwrap();
            let xs: Vec<f64> = (0..100).map(|k| 2.0 * root * k as f64 / 99.0).collect();
            prop_assert!(xs.windows(2).all(|w| res(w[1]) > res(w[0])));
            prop_assert!(res(root).abs() <= 1e-10);
        }
    }
}
