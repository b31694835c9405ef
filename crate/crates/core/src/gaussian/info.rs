//! Closed-form information quantities for jointly Gaussian `(Z, R)`.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};
use crate::linalg::{add_to_diagonal, log_det_spd, max_asymmetry, symmetric_eigenvalues, symmetrize, trace};
use crate::spectrum::FeatureMatrix;

const SYMMETRY_TOL: f64 = 1e-8;
const PSD_TOL: f64 = 1e-8;
/// `ln(1e-300)`: conditional covariances with a smaller log-determinant are singular.
const MIN_LOG_DET: f64 = -690.775_527_898_213_7;
/// Relative tolerance between the two Schur-complement forms of I(R;Z).
pub const SCHUR_AGREEMENT_REL: f64 = 1e-6;
/// Default ridge scale, multiplied by `trace(Σ) / dim`.
pub const DEFAULT_RIDGE_SCALE: f64 = 1e-9;

/// Joint covariance of `(Z, R)`, stored by blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCovariance {
    sigma_r: DMatrix<f64>,
    sigma_z: DMatrix<f64>,
    /// `m x n`, rows indexed by R, columns by Z.
    sigma_rz: DMatrix<f64>,
}

impl BlockCovariance {
    pub fn new(sigma_r: DMatrix<f64>, sigma_z: DMatrix<f64>, sigma_rz: DMatrix<f64>) -> Result<Self> {
        let m = sigma_r.nrows();
        let n = sigma_z.nrows();
        if m == 0 || n == 0 || sigma_r.ncols() != m || sigma_z.ncols() != n {
            return Err(Error::Shape("diagonal blocks must be square and nonempty".into()));
        }
        if sigma_rz.shape() != (m, n) {
            return Err(Error::Shape(format!(
                "cross block must be {m}x{n}, got {}x{}",
                sigma_rz.nrows(),
                sigma_rz.ncols()
            )));
        }
        let mut out = Self {
            sigma_r,
            sigma_z,
            sigma_rz,
        };
        let joint = out.assembled();
        if joint.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite covariance entry".into()));
        }
        let scale = joint.abs().max().max(1.0);
        for (name, block) in [("sigma_r", &out.sigma_r), ("sigma_z", &out.sigma_z)] {
            let asym = max_asymmetry(block);
            if asym > SYMMETRY_TOL * scale {
                return Err(Error::InvalidMatrix(format!("{name} asymmetry {asym:e}")));
            }
        }
        symmetrize(&mut out.sigma_r);
        symmetrize(&mut out.sigma_z);
        let smallest = *symmetric_eigenvalues(&out.assembled()).last().expect("nonempty");
        if smallest < -PSD_TOL * scale {
            return Err(Error::InvalidMatrix(format!(
                "joint covariance has eigenvalue {smallest:e}"
            )));
        }
        Ok(out)
    }

    /// Splits a joint `(n + m) x (n + m)` covariance ordered `(Z, R)`.
    pub fn from_joint(joint: &DMatrix<f64>, dim_z: usize) -> Result<Self> {
        let total = joint.nrows();
        if joint.ncols() != total || dim_z == 0 || dim_z >= total {
            return Err(Error::Shape(format!(
                "cannot split {}x{} joint covariance with dim_z = {dim_z}",
                total,
                joint.ncols()
            )));
        }
        let m = total - dim_z;
        Self::new(
            joint.view((dim_z, dim_z), (m, m)).into_owned(),
            joint.view((0, 0), (dim_z, dim_z)).into_owned(),
            joint.view((dim_z, 0), (m, dim_z)).into_owned(),
        )
    }

    pub fn dim_r(&self) -> usize {
        self.sigma_r.nrows()
    }

    pub fn dim_z(&self) -> usize {
        self.sigma_z.nrows()
    }

    pub fn sigma_r(&self) -> &DMatrix<f64> {
        &self.sigma_r
    }

    pub fn sigma_z(&self) -> &DMatrix<f64> {
        &self.sigma_z
    }

    pub fn sigma_rz(&self) -> &DMatrix<f64> {
        &self.sigma_rz
    }

    pub fn sigma_zr(&self) -> DMatrix<f64> {
        self.sigma_rz.transpose()
    }

    /// `[[Σ_Z, Σ_ZR], [Σ_RZ, Σ_R]]`.
    pub fn assembled(&self) -> DMatrix<f64> {
        let (m, n) = (self.dim_r(), self.dim_z());
        let mut joint = DMatrix::zeros(m + n, m + n);
        joint.view_mut((0, 0), (n, n)).copy_from(&self.sigma_z);
        joint.view_mut((n, n), (m, m)).copy_from(&self.sigma_r);
        joint.view_mut((n, 0), (m, n)).copy_from(&self.sigma_rz);
        joint.view_mut((0, n), (n, m)).copy_from(&self.sigma_rz.transpose());
        joint
    }

    /// `1e-9 · trace(Σ) / (m + n)`.
    pub fn default_ridge(&self) -> f64 {
        DEFAULT_RIDGE_SCALE * (trace(&self.sigma_r) + trace(&self.sigma_z))
            / (self.dim_r() + self.dim_z()) as f64
    }
}

/// Sample covariance (`1/(n-1)`) of the column-concatenated `(Z, R)` rows.
pub fn empirical_block_covariance(r: &FeatureMatrix, z: &FeatureMatrix) -> Result<BlockCovariance> {
    let n = r.nrows();
    if z.nrows() != n {
        return Err(Error::Shape(format!(
            "R has {n} rows but Z has {}",
            z.nrows()
        )));
    }
    if n < 2 {
        return Err(Error::InvalidInput("covariance needs at least 2 samples".into()));
    }
    let (m, k) = (r.ncols(), z.ncols());
    if n < m + k + 1 {
        log::warn!("only {n} samples for a {}-dimensional joint covariance", m + k);
    }
    let mut joined = DMatrix::zeros(n, k + m);
    joined.view_mut((0, 0), (n, k)).copy_from(&z.centered());
    joined.view_mut((0, k), (n, m)).copy_from(&r.centered());
    let mut joint = joined.transpose() * &joined / (n - 1) as f64;
    symmetrize(&mut joint);
    BlockCovariance::from_joint(&joint, k)
}

/// The log-determinants that make up both Schur forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchurTerms {
    pub log_det_r: f64,
    pub log_det_z: f64,
    /// `ln |Var(Z|R)|`.
    pub log_det_z_given_r: f64,
    /// `ln |Var(R|Z)|`.
    pub log_det_r_given_z: f64,
}

impl SchurTerms {
    /// `½(ln|Σ_Z| - ln|Var(Z|R)|)`.
    pub fn mi_via_z(&self) -> f64 {
        0.5 * (self.log_det_z - self.log_det_z_given_r)
    }

    /// `½(ln|Σ_R| - ln|Var(R|Z)|)`.
    pub fn mi_via_r(&self) -> f64 {
        0.5 * (self.log_det_r - self.log_det_r_given_z)
    }
}

/// `ln |a - bᵀ c⁻¹ b|`, where `c_chol` factors `c`.
fn log_det_schur(a: &DMatrix<f64>, c_chol: &Cholesky<f64, nalgebra::Dyn>, b: &DMatrix<f64>, what: &str) -> Result<f64> {
    let w = c_chol.l().solve_lower_triangular(b).expect("Cholesky factor is invertible");
    let mut cond = a - w.transpose() * w;
    symmetrize(&mut cond);
    match log_det_spd(&cond) {
        Some(ld) if ld >= MIN_LOG_DET => Ok(ld),
        Some(ld) => Err(Error::SingularModel(format!(
            "ln |{what}| = {ld:.3} is below ln(1e-300); one block is a deterministic map of the other"
        ))),
        None => Err(Error::SingularModel(format!(
            "{what} is not positive definite; one block is a deterministic map of the other"
        ))),
    }
}

/// Evaluates every log-determinant after adding `ridge` to both diagonal blocks.
pub fn schur_terms(c: &BlockCovariance, ridge: f64) -> Result<SchurTerms> {
    if !(ridge >= 0.0) || !ridge.is_finite() {
        return Err(Error::param("ridge", format!("must be finite and >= 0, got {ridge}")));
    }
    let mut sr = c.sigma_r.clone();
    let mut sz = c.sigma_z.clone();
    add_to_diagonal(&mut sr, ridge);
    add_to_diagonal(&mut sz, ridge);
    let chol_r = Cholesky::new(sr.clone())
        .ok_or_else(|| Error::SingularModel("Σ_R is not positive definite".into()))?;
    let chol_z = Cholesky::new(sz.clone())
        .ok_or_else(|| Error::SingularModel("Σ_Z is not positive definite".into()))?;
    let ld = |ch: &Cholesky<f64, nalgebra::Dyn>| 2.0 * ch.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let log_det_r = ld(&chol_r);
    let log_det_z = ld(&chol_z);
    let log_det_z_given_r = log_det_schur(&sz, &chol_r, &c.sigma_rz, "Var(Z|R)")?;
    let log_det_r_given_z = log_det_schur(&sr, &chol_z, &c.sigma_zr(), "Var(R|Z)")?;
    Ok(SchurTerms {
        log_det_r,
        log_det_z,
        log_det_z_given_r,
        log_det_r_given_z,
    })
}

/// Closed-form `I(R;Z)`, evaluated through both Schur complements.
///
/// The two forms must agree to [`SCHUR_AGREEMENT_REL`] (plus `1e-10`
/// absolute slack for values near zero); their mean is returned.
pub fn gaussian_mutual_info(c: &BlockCovariance, ridge: f64) -> Result<f64> {
    let t = schur_terms(c, ridge)?;
    let (a, b) = (t.mi_via_z(), t.mi_via_r());
    let tol = SCHUR_AGREEMENT_REL * a.abs().max(b.abs()) + 1e-10;
    if (a - b).abs() > tol {
        return Err(Error::Numerical(format!(
            "Schur forms disagree: {a} via Var(Z|R), {b} via Var(R|Z)"
        )));
    }
    Ok(0.5 * (a + b))
}

/// `ln |Σ|`, retrying once with a `1e-12 · trace/m` ridge.
fn log_det_with_fallback(sigma: &DMatrix<f64>) -> Result<f64> {
    if let Some(ld) = log_det_spd(sigma) {
        return Ok(ld);
    }
    let mut ridged = sigma.clone();
    add_to_diagonal(&mut ridged, 1e-12 * trace(sigma) / sigma.nrows() as f64);
    log_det_spd(&ridged)
        .ok_or_else(|| Error::SingularModel("covariance is not positive definite".into()))
}

/// Differential entropy `(m/2) ln 2π + ½ ln|Σ_R| + m/2`.
pub fn gaussian_entropy(sigma_r: &DMatrix<f64>) -> Result<f64> {
    let m = sigma_r.nrows();
    if m == 0 || sigma_r.ncols() != m {
        return Err(Error::Shape("covariance must be square and nonempty".into()));
    }
    let mf = m as f64;
    Ok(0.5 * mf * (2.0 * PI).ln() + 0.5 * log_det_with_fallback(sigma_r)? + 0.5 * mf)
}

/// Variance-differential, conditional-variance and total-dimension terms of
/// the upper bound `I(Y;R) ≤ G + K + V + D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTerms {
    pub k_term: f64,
    pub v_term: f64,
    pub d_term: f64,
    pub g_const: f64,
}

impl BoundTerms {
    pub fn upper_bound(&self) -> f64 {
        self.g_const + self.k_term + self.v_term + self.d_term
    }
}

/// Unridged decomposition; `k + v + d = H(R) - I(R;Z)`.
pub fn bound_decomposition(c: &BlockCovariance, g_const: f64) -> Result<BoundTerms> {
    let t = schur_terms(c, 0.0)?;
    let log_det_r = log_det_with_fallback(c.sigma_r())?;
    let m = c.dim_r() as f64;
    Ok(BoundTerms {
        k_term: 0.5 * (log_det_r - t.log_det_z),
        v_term: 0.5 * t.log_det_z_given_r,
        d_term: 0.5 * m * ((2.0 * PI).ln() + 1.0),
        g_const,
    })
}
