//! Core data types: polynomial vector fields, dilation maps, system
//! descriptions and the weighted max-type Lyapunov function.
//!
//! The systems handled here are
//!
//! ```text
//! continuous:  x'(t)   = f(x(t)) + sum_q g_q(x(t - tau_q(t)))
//! discrete:    x(k+1)  = f(x(k)) + sum_q g_q(x(k - d_q(k)))
//! ```
//!
//! with `f`, `g_q` polynomial and homogeneous of a common degree `p` with
//! respect to a dilation `delta_lambda(x) = (lambda^r_1 x_1, ..., lambda^r_n x_n)`.

mod poly;

pub use poly::{Monomial, PolyVectorField, Polynomial};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Absolute tolerance used when comparing Lyapunov values and states.
pub const COMPARE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeKind {
    Continuous,
    Discrete,
}

/// Dilation exponents `r_1..r_n`, all positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Dilation {
    r: Vec<f64>,
    r_max: f64,
}

impl TryFrom<Vec<f64>> for Dilation {
    type Error = Error;

    fn try_from(r: Vec<f64>) -> Result<Self> {
        Dilation::new(r)
    }
}

impl From<Dilation> for Vec<f64> {
    fn from(d: Dilation) -> Self {
        d.r
    }
}

impl Dilation {
    pub fn new(r: Vec<f64>) -> Result<Self> {
        if r.is_empty() {
            return Err(invalid("r", "at least one exponent required"));
        }
        if let Some((i, &ri)) = r
            .iter()
            .enumerate()
            .find(|(_, &ri)| !(ri > 0.0 && ri.is_finite()))
        {
            return Err(Error::NonPositive {
                index: i,
                value: ri,
            });
        }
        let r_max = r.iter().copied().fold(f64::MIN, f64::max);
        Ok(Dilation { r, r_max })
    }

    /// The standard dilation `r = (1, ..., 1)`.
    pub fn standard(n: usize) -> Self {
        Dilation {
            r: vec![1.0; n],
            r_max: 1.0,
        }
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn is_standard(&self) -> bool {
        self.r.iter().all(|&ri| ri == 1.0)
    }

    /// Exponents `r_max / r_i` that turn `x_i / v_i` into a degree-`r_max`
    /// quantity.
    pub fn component_exponents(&self) -> Vec<f64> {
        self.r.iter().map(|&ri| self.r_max / ri).collect()
    }

    pub fn dilate(&self, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
        if !(lambda > 0.0) {
            return Err(invalid("lambda", format!("must be positive, got {lambda}")));
        }
        self.check_dim(x.len())?;
        Ok(self
            .r
            .iter()
            .zip(x)
            .map(|(&ri, &xi)| lambda.powf(ri) * xi)
            .collect())
    }

    /// Homogeneous norm `max_i |x_i|^(1/r_i)`, of degree one under the
    /// dilation.
    pub fn homogeneous_norm(&self, x: &[f64]) -> f64 {
        self.r
            .iter()
            .zip(x)
            .map(|(&ri, &xi)| xi.abs().powf(1.0 / ri))
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.r.len() {
            return Err(Error::DimensionMismatch {
                expected: self.r.len(),
                got: n,
            });
        }
        Ok(())
    }
}

/// Matrices `(A, [B_q])` of a linear model.
pub type LinearParts = (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>);

/// A delayed positive system `f + sum_q g_q`, homogeneous of degree `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSystem", into = "RawSystem")]
pub struct SystemModel {
    kind: TimeKind,
    f: PolyVectorField,
    delayed: Vec<PolyVectorField>,
    dilation: Dilation,
    degree: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    kind: TimeKind,
    f: PolyVectorField,
    delayed: Vec<PolyVectorField>,
    dilation: Dilation,
    degree: f64,
}

impl TryFrom<RawSystem> for SystemModel {
    type Error = Error;

    fn try_from(raw: RawSystem) -> Result<Self> {
        SystemModel::new(raw.kind, raw.f, raw.delayed, raw.dilation, raw.degree)
    }
}

impl From<SystemModel> for RawSystem {
    fn from(m: SystemModel) -> Self {
        RawSystem {
            kind: m.kind,
            f: m.f,
            delayed: m.delayed,
            dilation: m.dilation,
            degree: m.degree,
        }
    }
}

impl SystemModel {
    pub fn new(
        kind: TimeKind,
        f: PolyVectorField,
        delayed: Vec<PolyVectorField>,
        dilation: Dilation,
        degree: f64,
    ) -> Result<Self> {
        let n = f.n();
        for g in &delayed {
            if g.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: g.n(),
                });
            }
        }
        dilation.check_dim(n)?;
        if !(degree >= 0.0 && degree.is_finite()) {
            return Err(invalid(
                "degree",
                format!("must be a finite value >= 0, got {degree}"),
            ));
        }
        Ok(SystemModel {
            kind,
            f,
            delayed,
            dilation,
            degree,
        })
    }

    /// `x -> A x + sum_q B_q x(delayed)`, standard dilation, degree zero.
    pub fn linear(kind: TimeKind, a: &[Vec<f64>], b: &[Vec<Vec<f64>>]) -> Result<Self> {
        let f = PolyVectorField::linear(a)?;
        let delayed = b
            .iter()
            .map(|m| PolyVectorField::linear(m))
            .collect::<Result<Vec<_>>>()?;
        let n = f.n();
        Self::new(kind, f, delayed, Dilation::standard(n), 0.0)
    }

    pub fn kind(&self) -> TimeKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.f.n()
    }

    pub fn f(&self) -> &PolyVectorField {
        &self.f
    }

    pub fn delayed(&self) -> &[PolyVectorField] {
        &self.delayed
    }

    pub fn dilation(&self) -> &Dilation {
        &self.dilation
    }

    pub fn degree(&self) -> f64 {
        self.degree
    }

    pub fn eval_f(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.f.eval(x)
    }

    /// `sum_q g_q(x)`.
    pub fn eval_delayed_sum(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n()];
        self.dilation.check_dim(x.len())?;
        for g in &self.delayed {
            g.eval_add_into(x, &mut out);
        }
        Ok(out)
    }

    /// The undelayed right-hand side `f(x) + sum_q g_q(x)`.
    pub fn eval_undelayed(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.f.eval(x)?;
        for g in &self.delayed {
            g.eval_add_into(x, &mut out);
        }
        Ok(out)
    }

    /// Returns `(A, [B_q])` when every field is linear.
    pub fn as_linear(&self) -> Option<LinearParts> {
        let a = self.f.as_linear()?;
        let b = self
            .delayed
            .iter()
            .map(|g| g.as_linear())
            .collect::<Option<Vec<_>>>()?;
        Some((a, b))
    }
}

/// `V(x) = max_i (x_i / v_i)^(r_max / r_i)` for a fixed weight `v > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lyapunov {
    v: Vec<f64>,
    exponents: Vec<f64>,
}

impl Lyapunov {
    pub fn new(v: &[f64], dilation: &Dilation) -> Result<Self> {
        dilation.check_dim(v.len())?;
        check_positive(v)?;
        Ok(Lyapunov {
            v: v.to_vec(),
            exponents: dilation.component_exponents(),
        })
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.v.len() {
            return Err(Error::DimensionMismatch {
                expected: self.v.len(),
                got: x.len(),
            });
        }
        if let Some((i, &xi)) = x.iter().enumerate().find(|(_, &xi)| xi < -COMPARE_TOL) {
            return Err(Error::NegativeState {
                index: i,
                value: xi,
            });
        }
        Ok(self.value_clamped(x))
    }

    /// Same as [`Lyapunov::value`] but treats negative components as zero.
    pub fn value_clamped(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.v)
            .zip(&self.exponents)
            .map(|((&xi, &vi), &e)| (xi.max(0.0) / vi).powf(e))
            .fold(0.0, f64::max)
    }
}

/// Convenience wrapper around [`Lyapunov::value`].
pub fn lyapunov_v(v: &[f64], dilation: &Dilation, x: &[f64]) -> Result<f64> {
    Lyapunov::new(v, dilation)?.value(x)
}

pub(crate) fn check_positive(v: &[f64]) -> Result<()> {
    match v
        .iter()
        .enumerate()
        .find(|(_, &vi)| !(vi > 0.0 && vi.is_finite()))
    {
        Some((index, &value)) => Err(Error::NonPositive { index, value }),
        None => Ok(()),
    }
}

/// Where a certificate vector came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    LinearSolve,
    RaySearch,
    UserSupplied,
}

/// A candidate `v > 0` together with its evaluated margins.
///
/// Continuous margins are `f_i(v) + sum_q g_{q,i}(v)`; discrete margins
/// subtract `v_i`. The certificate is valid when every margin is strictly
/// negative beyond the configured tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub v: Vec<f64>,
    pub margins: Vec<f64>,
    pub valid: bool,
    pub provenance: Provenance,
}

/// Nested level sets `S(m) = { x >= 0 : V(x) <= gamma^m ||phi|| }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSetProbe {
    gamma: f64,
    phi_norm: f64,
}

impl LevelSetProbe {
    pub fn new(gamma: f64, phi_norm: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(invalid("gamma", format!("must lie in [0, 1), got {gamma}")));
        }
        if !(phi_norm >= 0.0 && phi_norm.is_finite()) {
            return Err(invalid(
                "phi_norm",
                format!("must be finite and >= 0, got {phi_norm}"),
            ));
        }
        Ok(LevelSetProbe { gamma, phi_norm })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn phi_norm(&self) -> f64 {
        self.phi_norm
    }

    pub fn threshold(&self, m: u32) -> f64 {
        if m == 0 {
            self.phi_norm
        } else {
            self.gamma.powi(m as i32) * self.phi_norm
        }
    }

    /// Thresholds for `m = 0..=m_max`.
    pub fn thresholds(&self, m_max: u32) -> Vec<f64> {
        (0..=m_max).map(|m| self.threshold(m)).collect()
    }
}
