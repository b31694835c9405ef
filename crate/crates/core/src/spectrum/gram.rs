//! Unit-diagonal Gram matrices and the matrix-based α-Rényi estimators.

use nalgebra::DMatrix;

use super::{FeatureMatrix, ZERO_TERM};
use crate::error::{Error, Result};
use crate::linalg::{max_asymmetry, symmetric_eigenvalues, symmetrize};

const SYMMETRY_TOL: f64 = 1e-9;
const DIAGONAL_TOL: f64 = 1e-9;
const PSD_TOL: f64 = 1e-8;

/// Symmetric PSD `n x n` matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix(DMatrix<f64>);

impl GramMatrix {
    /// Validates symmetry, unit diagonal and numerical PSD-ness.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let n = values.nrows();
        if n == 0 || values.ncols() != n {
            return Err(Error::InvalidMatrix(format!(
                "Gram matrix must be square and nonempty, got {}x{}",
                n,
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        let asym = max_asymmetry(&values);
        if asym > SYMMETRY_TOL {
            return Err(Error::InvalidMatrix(format!("asymmetry {asym:e} exceeds tolerance")));
        }
        if let Some(i) = (0..n).find(|&i| (values[(i, i)] - 1.0).abs() > DIAGONAL_TOL) {
            return Err(Error::InvalidMatrix(format!(
                "diagonal entry {i} is {}, expected 1",
                values[(i, i)]
            )));
        }
        let mut values = values;
        symmetrize(&mut values);
        let smallest = *symmetric_eigenvalues(&values).last().expect("nonempty");
        if smallest < -PSD_TOL {
            return Err(Error::InvalidMatrix(format!(
                "smallest eigenvalue {smallest:e} is below -{PSD_TOL:e}"
            )));
        }
        Ok(Self(values))
    }

    /// Gram matrix of l2-normalized rows (no centering).
    pub fn from_features(x: &FeatureMatrix) -> Result<Self> {
        let u = x.row_normalized()?;
        let mut g = &u * u.transpose();
        symmetrize(&mut g);
        for i in 0..g.nrows() {
            g[(i, i)] = 1.0;
        }
        Ok(Self(g))
    }

    /// Elementwise product; again unit-diagonal PSD (Schur product theorem).
    pub fn hadamard(&self, other: &GramMatrix) -> Result<GramMatrix> {
        if self.size() != other.size() {
            return Err(Error::Shape(format!(
                "Hadamard product of {0}x{0} and {1}x{1} Gram matrices",
                self.size(),
                other.size()
            )));
        }
        Ok(GramMatrix(self.0.component_mul(&other.0)))
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Eigenvalues descending, small values clamped to zero, negatives floored at zero.
    pub fn eigenvalues(&self) -> Vec<f64> {
        symmetric_eigenvalues(&self.0)
            .into_iter()
            .map(|v| v.max(0.0))
            .collect()
    }
}

/// `1/(1-α) ln tr((A/n)^α)`.
///
/// For `α = 2` the trace is the squared Frobenius norm, so no eigensolve is
/// needed.
pub fn renyi_matrix_entropy(a: &GramMatrix, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() || alpha == 1.0 {
        return Err(Error::param("alpha", format!("must be positive and != 1, got {alpha}")));
    }
    let n = a.size() as f64;
    let tr = if alpha == 2.0 {
        a.0.iter().map(|v| v * v).sum::<f64>() / (n * n)
    } else {
        a.eigenvalues()
            .into_iter()
            .map(|v| v / n)
            .filter(|&v| v >= ZERO_TERM)
            .map(|v| v.powf(alpha))
            .sum()
    };
    Ok(tr.ln() / (1.0 - alpha))
}

/// `H_α(A) + H_α(B) - H_α(A ⊙ B)` on prebuilt Gram matrices.
pub fn matrix_mutual_information_gram(a: &GramMatrix, b: &GramMatrix, alpha: f64) -> Result<f64> {
    let joint = a.hadamard(b)?;
    Ok(renyi_matrix_entropy(a, alpha)? + renyi_matrix_entropy(b, alpha)?
        - renyi_matrix_entropy(&joint, alpha)?)
}

/// Matrix-based mutual information between two feature matrices over the
/// same samples.
pub fn matrix_mutual_information(x: &FeatureMatrix, y: &FeatureMatrix, alpha: f64) -> Result<f64> {
    if x.nrows() != y.nrows() {
        return Err(Error::Shape(format!(
            "row counts differ: {} vs {}",
            x.nrows(),
            y.nrows()
        )));
    }
    if x.nrows() < 2 {
        return Err(Error::InvalidInput("matrix mutual information needs at least 2 rows".into()));
    }
    let a = GramMatrix::from_features(x)?;
    let b = GramMatrix::from_features(y)?;
    matrix_mutual_information_gram(&a, &b, alpha)
}

/// `-Σ λ ln λ + Σ λ` over the eigenvalues of `A`.
pub fn matrix_entropy_me(a: &GramMatrix) -> Result<f64> {
    let eig = a.eigenvalues();
    let entropy: f64 = eig.iter().filter(|&&v| v >= ZERO_TERM).map(|&v| v * v.ln()).sum();
    let trace: f64 = eig.iter().sum();
    Ok(-entropy + trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gram(n: usize, f: impl Fn(usize, usize) -> f64) -> GramMatrix {
        GramMatrix::new(DMatrix::from_fn(n, n, f)).unwrap()
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(GramMatrix::new(asym), Err(Error::InvalidMatrix(_))));
        let diag = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert!(GramMatrix::new(diag).is_err());
        // Correlation 2 is not PSD.
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(GramMatrix::new(indefinite), Err(Error::InvalidMatrix(_))));
    }

    #[test]
    fn renyi_examples() {
        let n = 6;
        let id = gram(n, |i, j| if i == j { 1.0 } else { 0.0 });
        assert!((renyi_matrix_entropy(&id, 2.0).unwrap() - (n as f64).ln()).abs() < 1e-12);
        let ones = gram(n, |_, _| 1.0);
        assert!(renyi_matrix_entropy(&ones, 2.0).unwrap().abs() < 1e-12);
        let blocks = gram(4, |i, j| if i / 2 == j / 2 { 1.0 } else { 0.0 });
        // Oracle: (B/4)² has trace 8/16 = 1/2.
        assert!((renyi_matrix_entropy(&blocks, 2.0).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!(renyi_matrix_entropy(&id, 1.0).is_err());
        assert!(renyi_matrix_entropy(&id, -2.0).is_err());
    }

    #[test]
    fn renyi_general_alpha_agrees_with_fast_path_limit() {
        let g = gram(3, |i, j| if i == j { 1.0 } else { 0.3 });
        let fast = renyi_matrix_entropy(&g, 2.0).unwrap();
        // Same quantity through the eigen path.
        let eig: f64 = g.eigenvalues().iter().map(|v| (v / 3.0).powi(2)).sum();
        assert!((fast + eig.ln()).abs() < 1e-12);
        let a3 = renyi_matrix_entropy(&g, 3.0).unwrap();
        let eig3: f64 = g.eigenvalues().iter().map(|v| (v / 3.0).powi(3)).sum();
        assert!((a3 - eig3.ln() / -2.0).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_with_identity_partner() {
        let a = gram(3, |i, j| if i == j { 1.0 } else { 0.4 });
        let id = gram(3, |i, j| if i == j { 1.0 } else { 0.0 });
        let mi = matrix_mutual_information_gram(&a, &id, 2.0).unwrap();
        assert!((mi - renyi_matrix_entropy(&a, 2.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_three_sample_hand_example() {
        let a = GramMatrix::new(DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 1.0],
        ))
        .unwrap();
        let b = GramMatrix::new(DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.5, 0.2, 0.5, 1.0, 0.0, 0.2, 0.0, 1.0],
        ))
        .unwrap();
        // Squared Frobenius norms: A 3.5, B 3.58, A⊙B 3.125. With α = 2,
        // I = ln(9/3.5) + ln(9/3.58) - ln(9/3.125) = ln(9 * 3.125 / (3.5 * 3.58)).
        let hand = (9.0_f64 * 3.125 / (3.5 * 3.58)).ln();
        let mi = matrix_mutual_information_gram(&a, &b, 2.0).unwrap();
        assert!((mi - hand).abs() < 1e-9);
    }

    #[test]
    fn mutual_information_shape_errors() {
        let x = FeatureMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]).unwrap();
        let y = FeatureMatrix::from_row_slice(2, 1, &[1.0, 2.0]).unwrap();
        assert!(matches!(matrix_mutual_information(&x, &y, 2.0), Err(Error::Shape(_))));
    }

    #[test]
    fn self_information_is_nonnegative() {
        let x = FeatureMatrix::from_row_slice(
            4,
            2,
            &[1.0, 0.2, -0.3, 1.0, 0.5, 0.5, -1.0, -0.1],
        )
        .unwrap();
        let a = GramMatrix::from_features(&x).unwrap();
        let direct = 2.0 * renyi_matrix_entropy(&a, 2.0).unwrap()
            - renyi_matrix_entropy(&a.hadamard(&a).unwrap(), 2.0).unwrap();
        let mi = matrix_mutual_information(&x, &x, 2.0).unwrap();
        assert!((mi - direct).abs() < 1e-12);
        assert!(mi >= 0.0);
    }

    #[test]
    fn matrix_entropy_examples() {
        let n = 5;
        let id = gram(n, |i, j| if i == j { 1.0 } else { 0.0 });
        assert!((matrix_entropy_me(&id).unwrap() - n as f64).abs() < 1e-10);
        let ones = gram(n, |_, _| 1.0);
        let nf = n as f64;
        assert!((matrix_entropy_me(&ones).unwrap() - (nf - nf * nf.ln())).abs() < 1e-9);
    }
}
