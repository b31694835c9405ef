//! NT-Xent (InfoNCE) and VICReg losses with analytic gradients, and their
//! α-weighted combination.
//!
//! Both views are `N x D` matrices whose row `i` embeds the same sample.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossConfig {
    /// InfoNCE temperature.
    pub tau: f64,
    /// Invariance weight.
    pub lambda_sim: f64,
    /// Variance weight.
    pub mu_var: f64,
    /// Covariance weight.
    pub nu_cov: f64,
    /// Target standard deviation of each embedding dimension.
    pub gamma: f64,
    /// Added to the variance inside the square root of the std.
    pub eps: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            tau: 0.1,
            lambda_sim: 25.0,
            mu_var: 25.0,
            nu_cov: 1.0,
            gamma: 1.0,
            eps: 1e-4,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::param("tau", format!("must be positive, got {}", self.tau)));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::param("gamma", format!("must be positive, got {}", self.gamma)));
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(Error::param("eps", format!("must be >= 0, got {}", self.eps)));
        }
        for (name, v) in [("lambda_sim", self.lambda_sim), ("mu_var", self.mu_var), ("nu_cov", self.nu_cov)] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        Ok(())
    }
}

/// Loss value and gradients with respect to both views.
#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    pub grad_z: DMatrix<f64>,
    pub grad_zp: DMatrix<f64>,
}

fn check_pair(z: &FeatureMatrix, zp: &FeatureMatrix) -> Result<()> {
    if z.nrows() != zp.nrows() || z.ncols() != zp.ncols() {
        return Err(Error::Shape(format!(
            "views differ in shape: {}x{} vs {}x{}",
            z.nrows(),
            z.ncols(),
            zp.nrows(),
            zp.ncols()
        )));
    }
    if z.nrows() < 2 {
        return Err(Error::DegenerateBatch(format!(
            "batch of {} has no negatives / no covariance",
            z.nrows()
        )));
    }
    Ok(())
}

/// NT-Xent averaged over all `2N` anchors.
///
/// For anchor `i` with positive `p(i)`,
/// `ℓ_i = -s(i, p(i))/τ + ln Σ_{k≠i} exp(s(i, k)/τ)` with `s` the cosine similarity.
pub fn info_nce_loss(z: &FeatureMatrix, zp: &FeatureMatrix, tau: f64) -> Result<LossOutput> {
    check_pair(z, zp)?;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::param("tau", format!("must be positive, got {tau}")));
    }
    let n = z.nrows();
    let d = z.ncols();
    let two_n = 2 * n;
    let mut u = DMatrix::zeros(two_n, d);
    u.view_mut((0, 0), (n, d)).copy_from(z.as_matrix());
    u.view_mut((n, 0), (n, d)).copy_from(zp.as_matrix());

    let mut norms = Vec::with_capacity(two_n);
    for i in 0..two_n {
        let norm = u.row(i).norm();
        if norm == 0.0 {
            return Err(Error::InvalidInput(format!(
                "embedding row {i} has zero norm; cosine similarity undefined"
            )));
        }
        u.row_mut(i).scale_mut(1.0 / norm);
        norms.push(norm);
    }
    let (loss, grad_hat) = if 2.0 / tau < MAX_SHIFTED_EXPONENT {
        nce_packed(&u, tau)
    } else {
        nce_dense(&u, tau)
    };
    // Through û = x / |x|: dL/dx = (dL/dû - (dL/dû · û) û) / |x|.
    let mut grad = grad_hat;
    for i in 0..two_n {
        let proj = grad.row(i).dot(&u.row(i));
        let hat = u.row(i).clone_owned();
        let mut row = grad.row_mut(i);
        row -= hat * proj;
        row /= norms[i];
    }
    Ok(LossOutput {
        loss,
        grad_z: grad.rows(0, n).into_owned(),
        grad_zp: grad.rows(n, n).into_owned(),
    })
}

/// Above this `2/τ`, `exp(s/τ - 1/τ)` could underflow and the per-row max
/// shift is used instead.
const MAX_SHIFTED_EXPONENT: f64 = 600.0;

fn positive_of(i: usize, n: usize) -> usize {
    if i < n {
        i + n
    } else {
        i - n
    }
}

/// Loss and `dL/dÛ` for unit rows `u` (`2N x D`).
///
/// Since `s ≤ 1`, shifting every logit by `1/τ` keeps the exponentials
/// symmetric, so only the strict upper triangle is evaluated.
fn nce_packed(u: &DMatrix<f64>, tau: f64) -> (f64, DMatrix<f64>) {
    let (two_n, d) = u.shape();
    let n = two_n / 2;
    let rows: Vec<f64> = (0..two_n).flat_map(|i| u.row(i).iter().copied().collect::<Vec<_>>()).collect();
    let row = |i: usize| &rows[i * d..(i + 1) * d];
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let shift = 1.0 / tau;
    let mut packed = Vec::with_capacity(two_n * (two_n - 1) / 2);
    let mut denom = vec![0.0; two_n];
    for i in 0..two_n {
        let ui = row(i);
        let mut di = 0.0;
        let (_, rest) = denom.split_at_mut(i + 1);
        for (dk, uk) in rest.iter_mut().zip(rows[(i + 1) * d..].chunks_exact(d)) {
            let e = (dot(ui, uk) / tau - shift).exp();
            packed.push(e);
            di += e;
            *dk += e;
        }
        denom[i] += di;
    }
    let inv = 1.0 / two_n as f64;
    let mut loss = 0.0;
    for i in 0..two_n {
        let p = positive_of(i, n);
        loss += -dot(row(i), row(p)) / tau + shift + denom[i].ln();
    }
    loss *= inv;

    // S = G + Gᵀ with G = dL/dlogits; dL/dÛ = S Û / τ.
    let recip: Vec<f64> = denom.iter().map(|v| 1.0 / v).collect();
    let mut grad = vec![0.0; two_n * d];
    let mut idx = 0;
    for i in 0..two_n {
        let p = positive_of(i, n);
        let ui = row(i);
        let (head, tail) = grad.split_at_mut((i + 1) * d);
        let gi = &mut head[i * d..];
        for (off, (gk, uk)) in tail.chunks_exact_mut(d).zip(rows[(i + 1) * d..].chunks_exact(d)).enumerate() {
            let mut sik = packed[idx] * (recip[i] + recip[i + 1 + off]);
            idx += 1;
            if i + 1 + off == p {
                sik -= 2.0;
            }
            let sik = sik * inv / tau;
            for j in 0..d {
                gi[j] += sik * uk[j];
                gk[j] += sik * ui[j];
            }
        }
    }
    (loss, DMatrix::from_row_slice(two_n, d, &grad))
}

/// Same quantities through the dense logit matrix with a per-row max shift.
fn nce_dense(u: &DMatrix<f64>, tau: f64) -> (f64, DMatrix<f64>) {
    let two_n = u.nrows();
    let n = two_n / 2;
    // Cosine logits are symmetric, so column i doubles as anchor i's row;
    // the buffer is overwritten in place with Gᵀ, where G = dL/dlogits.
    let mut buf = u * u.transpose();
    buf /= tau;
    let inv = 1.0 / two_n as f64;
    let mut loss = 0.0;
    for (i, mut col) in buf.column_iter_mut().enumerate() {
        let pos = positive_of(i, n);
        let positive = col[pos];
        col[i] = f64::NEG_INFINITY;
        let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        for v in col.iter_mut() {
            *v = (*v - max).exp();
            denom += *v;
        }
        loss += -positive + max + denom.ln();
        col *= inv / denom;
        col[pos] -= inv;
    }
    loss *= inv;

    let mut grad_hat = &buf * u;
    grad_hat += buf.tr_mul(u);
    grad_hat /= tau;
    (loss, grad_hat)
}

/// Individual VICReg terms, unweighted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VicregTerms {
    /// `s(Z, Z')`.
    pub invariance: f64,
    /// `v(Z) + v(Z')`.
    pub variance: f64,
    /// `c(Z) + c(Z')`.
    pub covariance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VicregOutput {
    pub output: LossOutput,
    pub terms: VicregTerms,
}

/// `v` and `c` of one view, plus `μ dv/dZ + ν dc/dZ`.
fn variance_covariance(z: &DMatrix<f64>, cfg: &LossConfig) -> (f64, f64, DMatrix<f64>) {
    let (n, d) = (z.nrows(), z.ncols());
    let mut centered = z.clone();
    for mut col in centered.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let denom = (n - 1) as f64;
    let cov = centered.transpose() * &centered / denom;
    let df = d as f64;

    let mut v = 0.0;
    let mut grad = DMatrix::zeros(n, d);
    for j in 0..d {
        let std = (cov[(j, j)] + cfg.eps).sqrt();
        let gap = cfg.gamma - std;
        // Strict inequality: subgradient 0 at the kink.
        if gap > 0.0 {
            v += gap;
            let scale = -cfg.mu_var / (df * denom * std);
            for i in 0..n {
                grad[(i, j)] += scale * centered[(i, j)];
            }
        }
    }
    v /= df;

    let mut off = cov.clone();
    for j in 0..d {
        off[(j, j)] = 0.0;
    }
    let c = off.iter().map(|x| x * x).sum::<f64>() / df;
    // c = (1/D) Σ_{i≠j} C_ij², dc/dZ = 4/(D (n-1)) · Z_c · offdiag(C).
    grad += centered * off * (4.0 * cfg.nu_cov / (df * denom));
    (v, c, grad)
}

/// `λ s(Z,Z') + μ [v(Z) + v(Z')] + ν [c(Z) + c(Z')]`.
pub fn vicreg_loss(z: &FeatureMatrix, zp: &FeatureMatrix, cfg: &LossConfig) -> Result<VicregOutput> {
    check_pair(z, zp)?;
    cfg.validate()?;
    let (a, b) = (z.as_matrix(), zp.as_matrix());
    let n = a.nrows() as f64;
    let diff = a - b;
    let invariance = diff.iter().map(|x| x * x).sum::<f64>() / n;
    let sim_grad = diff * (2.0 * cfg.lambda_sim / n);

    let (va, ca, ga) = variance_covariance(a, cfg);
    let (vb, cb, gb) = variance_covariance(b, cfg);
    let terms = VicregTerms {
        invariance,
        variance: va + vb,
        covariance: ca + cb,
    };
    let loss = cfg.lambda_sim * terms.invariance + cfg.mu_var * terms.variance + cfg.nu_cov * terms.covariance;
    Ok(VicregOutput {
        output: LossOutput {
            loss,
            grad_z: &sim_grad + ga,
            grad_zp: gb - sim_grad,
        },
        terms,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaDimOutput {
    /// `α L_NCE + (1 - α) L_VICReg`.
    pub loss: f64,
    pub nce: f64,
    pub vicreg: f64,
    pub grad_z: DMatrix<f64>,
    pub grad_zp: DMatrix<f64>,
}

/// Convex combination of the two losses and their gradients. Both losses are
/// always evaluated so each raw component can be logged.
pub fn adadim_loss(z: &FeatureMatrix, zp: &FeatureMatrix, alpha: f64, cfg: &LossConfig) -> Result<AdaDimOutput> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param("alpha", format!("must lie in [0, 1], got {alpha}")));
    }
    let nce = info_nce_loss(z, zp, cfg.tau)?;
    let vic = vicreg_loss(z, zp, cfg)?.output;
    let beta = 1.0 - alpha;
    Ok(AdaDimOutput {
        loss: alpha * nce.loss + beta * vic.loss,
        nce: nce.loss,
        vicreg: vic.loss,
        grad_z: nce.grad_z * alpha + vic.grad_z * beta,
        grad_zp: nce.grad_zp * alpha + vic.grad_zp * beta,
    })
}
