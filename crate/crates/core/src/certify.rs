//! Stability certificates: vectors `v > 0` with `f(v) + sum_q g_q(v) < 0`
//! (continuous) or `< v` (discrete).

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{check_positive, Certificate, Provenance, SystemModel, TimeKind};
use crate::properties::{check_homogeneity, Verdict};

/// Default relative strictness tolerance for certificate margins.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertificateSearchConfig {
    /// Number of candidate directions on the positive simplex.
    pub ray_samples: usize,
    pub refine_iters: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for CertificateSearchConfig {
    fn default() -> Self {
        CertificateSearchConfig {
            ray_samples: 256,
            refine_iters: 2000,
            tolerance: DEFAULT_TOLERANCE,
            seed: 0,
        }
    }
}

impl CertificateSearchConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.ray_samples < n {
            return Err(invalid(
                "ray_samples",
                format!("need at least {n} rays, got {}", self.ray_samples),
            ));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(invalid(
                "tolerance",
                format!("must be positive, got {}", self.tolerance),
            ));
        }
        Ok(())
    }
}

struct Evaluation {
    f: Vec<f64>,
    scale: Vec<f64>,
    margins: Vec<f64>,
}

fn evaluate(model: &SystemModel, v: &[f64]) -> Result<Evaluation> {
    let f = model.eval_f(v)?;
    let mut margins = f.clone();
    let mut scale: Vec<f64> = f.iter().map(|x| x.abs()).collect();
    for g in model.delayed() {
        let gv = g.eval(v)?;
        for i in 0..v.len() {
            margins[i] += gv[i];
            scale[i] += gv[i].abs();
        }
    }
    if model.kind() == TimeKind::Discrete {
        for i in 0..v.len() {
            margins[i] -= v[i];
            scale[i] += v[i];
        }
    }
    Ok(Evaluation { f, scale, margins })
}

fn strictly_negative(e: &Evaluation, tolerance: f64) -> bool {
    e.margins
        .iter()
        .zip(&e.f)
        .all(|(m, f)| *m < -tolerance * (1.0 + f.abs()))
}

/// Evaluates the certificate margins at `v` and decides strict validity.
pub fn verify_certificate(model: &SystemModel, v: &[f64], tolerance: f64) -> Result<Certificate> {
    if v.len() != model.n() {
        return Err(Error::DimensionMismatch {
            expected: model.n(),
            got: v.len(),
        });
    }
    check_positive(v)?;
    let e = evaluate(model, v)?;
    Ok(Certificate {
        v: v.to_vec(),
        valid: strictly_negative(&e, tolerance),
        margins: e.margins,
        provenance: Provenance::UserSupplied,
    })
}

fn to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: r.len(),
        });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn check_metzler(m: &DMatrix<f64>, what: &str) -> Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j && m[(i, j)] < 0.0 {
                return Err(Error::Structure(format!(
                    "{what} is not Metzler: entry ({i}, {j}) = {}",
                    m[(i, j)]
                )));
            }
        }
    }
    Ok(())
}

fn check_nonnegative(m: &DMatrix<f64>, what: &str) -> Result<()> {
    match m.iter().position(|&x| x < 0.0) {
        Some(k) => Err(Error::Structure(format!(
            "{what} has a negative entry ({}, {}) = {}",
            k % m.nrows(),
            k / m.nrows(),
            m[k]
        ))),
        None => Ok(()),
    }
}

/// Largest real part of the spectrum.
pub fn spectral_abscissa(m: &[Vec<f64>]) -> Result<f64> {
    let m = to_matrix(m)?;
    if m.nrows() == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(m.complex_eigenvalues()
        .iter()
        .map(|c| c.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &[Vec<f64>]) -> Result<f64> {
    let m = to_matrix(m)?;
    Ok(m.complex_eigenvalues()
        .iter()
        .map(|c| c.re.hypot(c.im))
        .fold(0.0, f64::max))
}

/// Solves `m v = rhs` and returns `v` when it is finite and componentwise
/// positive.
fn positive_solution(m: DMatrix<f64>, rhs: f64) -> Option<Vec<f64>> {
    let n = m.nrows();
    let b = nalgebra::DVector::from_element(n, rhs);
    let v = m.lu().solve(&b)?;
    v.iter()
        .all(|x| *x > 0.0 && x.is_finite())
        .then(|| v.iter().copied().collect())
}

/// Whether a Metzler matrix is Hurwitz.
///
/// For Metzler `M` this holds iff `M v = -1` has a positive solution. That
/// test is cross-checked against the eigenvalues; if the two disagree
/// (which only happens within rounding of the stability boundary) the
/// eigenvalue verdict is returned.
pub fn hurwitz_metzler(m: &[Vec<f64>]) -> Result<bool> {
    let mat = to_matrix(m)?;
    check_metzler(&mat, "matrix")?;
    let by_solve = positive_solution(mat, -1.0).is_some();
    let by_spectrum = spectral_abscissa(m)? < 0.0;
    Ok(if by_solve == by_spectrum {
        by_solve
    } else {
        by_spectrum
    })
}

/// Certificate for a linear positive system `A`, `[B_q]`.
///
/// Continuous: `v = -(A + sum B_q)^{-1} 1` when the sum is Hurwitz.
/// Discrete: `v = (I - A - sum B_q)^{-1} 1` when its spectral radius is
/// below one. Returns `None` when the stability condition fails.
pub fn find_certificate_linear(
    a: &[Vec<f64>],
    b: &[Vec<Vec<f64>>],
    kind: TimeKind,
    tolerance: f64,
) -> Result<Option<Certificate>> {
    let am = to_matrix(a)?;
    let n = am.nrows();
    match kind {
        TimeKind::Continuous => check_metzler(&am, "A")?,
        TimeKind::Discrete => check_nonnegative(&am, "A")?,
    }
    let mut m = am;
    for (q, bq) in b.iter().enumerate() {
        let bm = to_matrix(bq)?;
        if bm.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bm.nrows(),
            });
        }
        check_nonnegative(&bm, &format!("B_{}", q + 1))?;
        m += bm;
    }
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();

    let v = match kind {
        TimeKind::Continuous => {
            if !hurwitz_metzler(&rows)? {
                return Ok(None);
            }
            positive_solution(m, -1.0)
        }
        TimeKind::Discrete => {
            if spectral_radius(&rows)? >= 1.0 {
                return Ok(None);
            }
            positive_solution(DMatrix::identity(n, n) - m, 1.0)
        }
    };
    let Some(v) = v else {
        return Ok(None);
    };
    let model = SystemModel::linear(kind, a, b)?;
    let mut cert = verify_certificate(&model, &v, tolerance)?;
    cert.provenance = Provenance::LinearSolve;
    Ok(Some(cert))
}

/// Dilation-invariant badness of a direction: `max_i margin_i / scale_i`.
/// Negative exactly when every margin is negative.
fn score(model: &SystemModel, x: &[f64]) -> f64 {
    match evaluate(model, x) {
        Ok(e) => e
            .margins
            .iter()
            .zip(&e.scale)
            .map(|(m, s)| if *s > 0.0 { m / s } else { 0.0 })
            .fold(f64::NEG_INFINITY, f64::max),
        Err(_) => f64::INFINITY,
    }
}

fn candidate_rays(n: usize, cfg: &CertificateSearchConfig) -> Vec<Vec<f64>> {
    let mut rays = vec![vec![1.0 / n as f64; n]];
    for j in 0..n {
        let mut x = vec![0.1 / n as f64; n];
        x[j] += 0.9;
        rays.push(x);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    while rays.len() < cfg.ray_samples {
        let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let s: f64 = e.iter().sum();
        rays.push(e.iter().map(|x| (x / s).max(1e-12)).collect());
    }
    rays.truncate(cfg.ray_samples.max(1));
    rays
}

/// Projects onto the unit sphere of `max_i x_i^(1/r_i)` along the dilation
/// orbit. Discrete margins are only orbit-invariant for degree zero, so
/// other discrete models are left as they are.
fn normalize(model: &SystemModel, x: &mut [f64]) {
    if model.kind() == TimeKind::Discrete && model.degree() != 0.0 {
        return;
    }
    let d = model.dilation();
    let norm = d.homogeneous_norm(x);
    if norm > 0.0 && norm.is_finite() {
        if let Ok(y) = d.dilate(1.0 / norm, x) {
            x.copy_from_slice(&y);
        }
    }
}

/// Best-effort search for a certificate of a homogeneous model.
///
/// Margins keep their sign along dilation orbits, so only directions are
/// searched: rays on the positive simplex, then coordinate descent on the
/// best ray, then iteration of the undelayed dynamics from it. `None` means
/// the budget ran out and is not a proof that no certificate exists.
pub fn find_certificate_nonlinear(
    model: &SystemModel,
    cfg: &CertificateSearchConfig,
) -> Result<Option<Certificate>> {
    let n = model.n();
    cfg.validate(n)?;
    let d = model.dilation();
    for field in std::iter::once(model.f()).chain(model.delayed()) {
        let c = check_homogeneity(field, d, model.degree());
        if c.verdict != Verdict::Pass {
            return Err(Error::Hypothesis(format!(
                "certificate search needs a homogeneous model: {}",
                c.detail
            )));
        }
    }

    let accept = |x: &[f64]| -> Result<Option<Certificate>> {
        let mut cert = verify_certificate(model, x, cfg.tolerance)?;
        cert.provenance = Provenance::RaySearch;
        Ok(cert.valid.then_some(cert))
    };

    let rays = candidate_rays(n, cfg);
    let mut best = 0;
    let mut best_score = f64::INFINITY;
    for (k, ray) in rays.iter().enumerate() {
        let s = score(model, ray);
        if s < best_score {
            best = k;
            best_score = s;
        }
    }
    let mut x = rays[best].clone();
    if let Some(c) = accept(&x)? {
        return Ok(Some(c));
    }

    // coordinate descent with multiplicative steps
    let mut step = 0.5;
    let mut s = best_score;
    for _ in 0..cfg.refine_iters {
        let mut improved = false;
        for j in 0..n {
            for factor in [1.0 + step, 1.0 / (1.0 + step)] {
                let mut y = x.clone();
                y[j] *= factor;
                let sy = score(model, &y);
                if sy < s {
                    x = y;
                    s = sy;
                    improved = true;
                }
            }
        }
        normalize(model, &mut x);
        if s < 0.0 {
            if let Some(c) = accept(&x)? {
                return Ok(Some(c));
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }

    // follow the undelayed dynamics from the best direction
    let jac = model.f().jacobian();
    let mut y = x;
    for _ in 0..cfg.refine_iters {
        let mut next = match model.kind() {
            TimeKind::Continuous => {
                let rhs = model.eval_undelayed(&y)?;
                let mut rate: f64 = 0.0;
                for i in 0..n {
                    rate = rate.max(jac[i][i].eval(&y).abs()).max(rhs[i].abs() / y[i]);
                }
                if !(rate > 0.0 && rate.is_finite()) {
                    break;
                }
                let h = 0.5 / rate;
                y.iter()
                    .zip(&rhs)
                    .map(|(yi, fi)| yi + h * fi)
                    .collect::<Vec<_>>()
            }
            TimeKind::Discrete => model.eval_undelayed(&y)?,
        };
        if next.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            break;
        }
        normalize(model, &mut next);
        y = next;
        if score(model, &y) < 0.0 {
            if let Some(c) = accept(&y)? {
                return Ok(Some(c));
            }
        }
    }
    Ok(None)
}
