//! Polynomial vector fields with exact evaluation and power-rule Jacobians.

use std::collections::BTreeMap;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A single term `coeff * prod_l x_l^exp[l]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coeff: f64,
    pub exp: Vec<u32>,
}

impl Monomial {
    pub fn new(coeff: f64, exp: Vec<u32>) -> Self {
        Monomial { coeff, exp }
    }

    pub fn total_degree(&self) -> u32 {
        self.exp.iter().sum()
    }

    /// Weighted degree `sum_l exp[l] * weights[l]`.
    pub fn weighted_degree(&self, weights: &[f64]) -> f64 {
        self.exp
            .iter()
            .zip(weights)
            .map(|(&e, &w)| f64::from(e) * w)
            .sum()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.exp
            .iter()
            .zip(x)
            .filter(|(&e, _)| e > 0)
            .fold(self.coeff, |acc, (&e, &xl)| acc * xl.powi(e as i32))
    }
}

/// A real polynomial in `n` variables, stored as a list of monomials with
/// like terms merged and zero terms removed.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    n: usize,
    terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial {
            n,
            terms: Vec::new(),
        }
    }

    pub fn new(n: usize, terms: Vec<Monomial>) -> Result<Self> {
        for t in &terms {
            if t.exp.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: t.exp.len(),
                });
            }
            if !t.coeff.is_finite() {
                return Err(invalid(
                    "coeff",
                    format!("non-finite coefficient {}", t.coeff),
                ));
            }
        }
        Ok(Self::collect(n, terms))
    }

    fn collect(n: usize, terms: Vec<Monomial>) -> Self {
        let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for t in terms {
            *merged.entry(t.exp).or_insert(0.0) += t.coeff;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(exp, coeff)| Monomial { coeff, exp })
            .collect();
        Polynomial { n, terms }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Evaluates without a dimension check; `x.len()` must equal `n`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    /// Sum of absolute term values at `x`, used as a rounding scale.
    pub fn abs_eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x).abs()).sum()
    }

    /// Partial derivative with respect to variable `var` (power rule).
    pub fn derivative(&self, var: usize) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.exp[var] > 0)
            .map(|t| {
                let mut exp = t.exp.clone();
                exp[var] -= 1;
                Monomial {
                    coeff: t.coeff * f64::from(t.exp[var]),
                    exp,
                }
            })
            .collect();
        Self::collect(self.n, terms)
    }

    /// Restriction to the face `x_var = 0`.
    pub fn restrict_zero(&self, var: usize) -> Polynomial {
        Polynomial {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|t| t.exp[var] == 0)
                .cloned()
                .collect(),
        }
    }

    /// True when no coefficient is negative, which makes the polynomial
    /// nonnegative on the closed nonnegative orthant.
    pub fn has_nonnegative_coeffs(&self) -> bool {
        self.terms.iter().all(|t| t.coeff >= 0.0)
    }

    pub fn scale(&self, c: f64) -> Polynomial {
        Self::collect(
            self.n,
            self.terms
                .iter()
                .map(|t| Monomial::new(t.coeff * c, t.exp.clone()))
                .collect(),
        )
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n, rhs.n, "polynomials must share the variable count");
        Polynomial::collect(
            self.n,
            self.terms.iter().chain(&rhs.terms).cloned().collect(),
        )
    }
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.terms.serialize(s)
    }
}

/// A polynomial map `R^n -> R^n`, one polynomial per component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawField", into = "RawField")]
pub struct PolyVectorField {
    n: usize,
    components: Vec<Polynomial>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawField {
    n: usize,
    components: Vec<Vec<Monomial>>,
}

impl TryFrom<RawField> for PolyVectorField {
    type Error = Error;

    fn try_from(raw: RawField) -> Result<Self> {
        PolyVectorField::new(raw.n, raw.components)
    }
}

impl From<PolyVectorField> for RawField {
    fn from(f: PolyVectorField) -> Self {
        RawField {
            n: f.n,
            components: f.components.into_iter().map(|p| p.terms).collect(),
        }
    }
}

impl PolyVectorField {
    pub fn new(n: usize, components: Vec<Vec<Monomial>>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "dimension must be at least 1"));
        }
        if components.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: components.len(),
            });
        }
        let components = components
            .into_iter()
            .map(|terms| Polynomial::new(n, terms))
            .collect::<Result<Vec<_>>>()?;
        Ok(PolyVectorField { n, components })
    }

    pub fn from_polynomials(components: Vec<Polynomial>) -> Result<Self> {
        let n = components.len();
        if n == 0 {
            return Err(invalid("n", "dimension must be at least 1"));
        }
        if let Some(p) = components.iter().find(|p| p.n() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p.n(),
            });
        }
        Ok(PolyVectorField { n, components })
    }

    /// The linear field `x -> M x` for a row-major square matrix.
    pub fn linear(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut components = Vec::with_capacity(n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            let terms = row
                .iter()
                .enumerate()
                .map(|(j, &c)| {
                    let mut exp = vec![0; n];
                    exp[j] = 1;
                    Monomial::new(c, exp)
                })
                .collect();
            components.push(terms);
        }
        Self::new(n, components)
    }

    pub fn zero(n: usize) -> Self {
        PolyVectorField {
            n,
            components: vec![Polynomial::zero(n); n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Polynomial {
        &self.components[i]
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(self.components.iter().map(|p| p.eval(x)).collect())
    }

    /// Adds `F(x)` into `out`. Caller guarantees matching dimensions.
    pub(crate) fn eval_add_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(&self.components) {
            *o += p.eval(x);
        }
    }

    /// Symbolic Jacobian: entry `(i, j)` is `d F_i / d x_j`.
    pub fn jacobian(&self) -> Vec<Vec<Polynomial>> {
        self.components
            .iter()
            .map(|p| (0..self.n).map(|j| p.derivative(j)).collect())
            .collect()
    }

    /// Every monomial has total degree at least one, so `F(0) = 0`.
    pub fn vanishes_at_origin(&self) -> bool {
        self.components
            .iter()
            .all(|p| p.terms().iter().all(|t| t.total_degree() >= 1))
    }

    /// Returns the coefficient matrix when every monomial is linear.
    pub fn as_linear(&self) -> Option<Vec<Vec<f64>>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for (i, p) in self.components.iter().enumerate() {
            for t in p.terms() {
                if t.total_degree() != 1 {
                    return None;
                }
                let j = t.exp.iter().position(|&e| e == 1)?;
                m[i][j] += t.coeff;
            }
        }
        Some(m)
    }

    pub fn try_add(&self, other: &PolyVectorField) -> Result<PolyVectorField> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(PolyVectorField {
            n: self.n,
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn scale(&self, c: f64) -> PolyVectorField {
        PolyVectorField {
            n: self.n,
            components: self.components.iter().map(|p| p.scale(c)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_f() -> PolyVectorField {
        PolyVectorField::new(
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
        .unwrap()
    }

    fn example_g() -> PolyVectorField {
        PolyVectorField::new(
            2,
            vec![
                vec![Monomial::new(1.0, vec![1, 1])],
                vec![Monomial::new(2.0, vec![4, 0])],
            ],
        )
        .unwrap()
    }

    #[test]
    fn evaluates_example_fields() {
        assert_eq!(example_f().eval(&[1.0, 1.0]).unwrap(), vec![-3.0, -3.0]);
        assert_eq!(example_g().eval(&[1.0, 1.0]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(example_f().eval(&[2.0, 4.0]).unwrap(), vec![-24.0, -48.0]);
        assert_eq!(example_f().eval(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn eval_rejects_wrong_dimension() {
        assert!(matches!(
            example_f().eval(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn jacobian_power_rule() {
        let jac = example_f().jacobian();
        // d f1 / d x2 = 2 x1
        assert_eq!(jac[0][1].terms(), &[Monomial::new(2.0, vec![1, 0])]);
        // d f2 / d x1 = 2 x1 x2
        assert_eq!(jac[1][0].terms(), &[Monomial::new(2.0, vec![1, 1])]);

        let cubic = PolyVectorField::new(1, vec![vec![Monomial::new(-5.0, vec![3])]]).unwrap();
        assert_eq!(
            cubic.jacobian()[0][0].terms(),
            &[Monomial::new(-15.0, vec![2])]
        );
    }

    #[test]
    fn linear_field_jacobian_is_its_matrix() {
        let a = vec![vec![-2.0, 1.0], vec![0.5, -3.0]];
        let f = PolyVectorField::linear(&a).unwrap();
        let jac = f.jacobian();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(jac[i][j].eval(&[7.0, -3.0]), a[i][j]);
            }
        }
        assert_eq!(f.as_linear().unwrap(), a);
        assert!(example_f().as_linear().is_none());
    }

    #[test]
    fn like_terms_merge() {
        let p = Polynomial::new(
            1,
            vec![Monomial::new(2.0, vec![1]), Monomial::new(-2.0, vec![1])],
        )
        .unwrap();
        assert!(p.is_zero());
    }

    #[test]
    fn json_round_trip() {
        let json = r#"{"n":2,"components":[[{"coeff":-5,"exp":[3,0]},{"coeff":2,"exp":[1,1]}],[{"coeff":1,"exp":[2,1]},{"coeff":-4,"exp":[0,2]}]]}"#;
        let f: PolyVectorField = serde_json::from_str(json).unwrap();
        assert_eq!(f, example_f());
        let back: PolyVectorField =
            serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn json_rejects_bad_documents() {
        let wrong_len = r#"{"n":2,"components":[[{"coeff":1,"exp":[1]}],[]]}"#;
        assert!(serde_json::from_str::<PolyVectorField>(wrong_len).is_err());
        let unknown = r#"{"n":1,"components":[[]],"extra":0}"#;
        assert!(serde_json::from_str::<PolyVectorField>(unknown).is_err());
    }
}
