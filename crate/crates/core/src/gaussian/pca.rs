use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spectrum::FeatureMatrix;

/// Top-`k` principal axes of a fitted dataset. Projection does not whiten.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjector {
    mean: DVector<f64>,
    /// `k x d`, orthonormal rows.
    components: DMatrix<f64>,
    /// Covariance eigenvalues for each component, descending.
    explained: Vec<f64>,
}

impl PcaProjector {
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained
    }

    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.components.ncols()
    }

    /// Maps projected coordinates back to the input space.
    pub fn reconstruct(&self, y: &FeatureMatrix) -> Result<FeatureMatrix> {
        if y.ncols() != self.n_components() {
            return Err(Error::Shape(format!(
                "reconstruct expects {} columns, got {}",
                self.n_components(),
                y.ncols()
            )));
        }
        let mut out = y.as_matrix() * &self.components;
        for mut row in out.row_iter_mut() {
            row += self.mean.transpose();
        }
        FeatureMatrix::from_computed(out)
    }
}

pub fn fit_pca(x: &FeatureMatrix, k: usize) -> Result<PcaProjector> {
    let (n, d) = (x.nrows(), x.ncols());
    let max_k = (n.saturating_sub(1)).min(d);
    if k < 1 || k > max_k {
        return Err(Error::param("k", format!("must lie in [1, {max_k}], got {k}")));
    }
    let centered = x.centered();
    let svd = centered.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut components = DMatrix::zeros(k, d);
    let mut explained = Vec::with_capacity(k);
    for (row, &idx) in order.iter().take(k).enumerate() {
        let mut axis = v_t.row(idx).clone_owned();
        // Sign convention: largest-magnitude coordinate is positive.
        let pivot = axis.iter().copied().fold(0.0_f64, |best, v| if v.abs() > best.abs() { v } else { best });
        if pivot < 0.0 {
            axis.neg_mut();
        }
        components.row_mut(row).copy_from(&axis);
        let s = svd.singular_values[idx];
        explained.push(s * s / (n - 1) as f64);
    }
    Ok(PcaProjector {
        mean: x.column_means(),
        components,
        explained,
    })
}

/// `(X - mean) · componentsᵀ`.
pub fn project(p: &PcaProjector, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    if x.ncols() != p.input_dim() {
        return Err(Error::Shape(format!(
            "projector expects {} columns, got {}",
            p.input_dim(),
            x.ncols()
        )));
    }
    let mut centered = x.as_matrix().clone();
    for mut row in centered.row_iter_mut() {
        row -= p.mean.transpose();
    }
    FeatureMatrix::from_computed(centered * p.components.transpose())
}
