//! Small dense linear-algebra helpers shared by the metric and Gaussian modules.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

/// Relative magnitude below which eigenvalues are treated as solver noise.
pub const EIGEN_CLAMP_REL: f64 = 1e-10;

/// Eigenvalues of a symmetric matrix, sorted descending.
///
/// Values whose magnitude is below `EIGEN_CLAMP_REL * max|λ|` are clamped to
/// exactly zero. Remaining negative values are returned as-is so callers can
/// decide whether they violate positive semi-definiteness.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let largest = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    for v in values.iter_mut() {
        if v.abs() <= EIGEN_CLAMP_REL * largest {
            *v = 0.0;
        }
    }
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// `ln |m|` for a symmetric positive-definite matrix, via Cholesky.
/// Returns `None` if the factorization fails.
pub fn log_det_spd(m: &DMatrix<f64>) -> Option<f64> {
    let chol = Cholesky::new(m.clone())?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        let d = l[(i, i)];
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        acc += d.ln();
    }
    Some(2.0 * acc)
}

/// Largest absolute asymmetry `|m_ij - m_ji|`.
pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Replace `m` by `(m + mᵀ) / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

pub fn add_to_diagonal(m: &mut DMatrix<f64>, value: f64) {
    for i in 0..m.nrows().min(m.ncols()) {
        m[(i, i)] += value;
    }
}

pub fn trace(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}
