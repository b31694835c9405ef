//! Eigen/singular spectra and the dimensionality metrics computed from them.
//!
//! Every metric takes its logarithms in base e. Entropy sums skip terms whose
//! (normalized) value is below [`ZERO_TERM`], which implements `0 ln 0 = 0`.

mod features;
mod gram;

pub use features::FeatureMatrix;
pub use gram::{matrix_entropy_me, matrix_mutual_information, matrix_mutual_information_gram, renyi_matrix_entropy, GramMatrix};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::EIGEN_CLAMP_REL;

/// Normalized values below this are dropped from entropy sums.
pub const ZERO_TERM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    Raw,
    L1,
}

/// Nonnegative values sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
    normalization: Normalization,
}

impl Spectrum {
    /// Validates and sorts `values` descending; tagged `Raw`.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("spectrum is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "spectrum values must be finite and nonnegative, got {v}"
            )));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self {
            values,
            normalization: Normalization::Raw,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Values divided by their sum.
    pub fn l1_normalized(&self) -> Result<Spectrum> {
        let total = self.sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateSpectrum("all values are zero".into()));
        }
        Ok(Spectrum {
            values: self.values.iter().map(|v| v / total).collect(),
            normalization: Normalization::L1,
        })
    }
}

/// Which spectrum of a feature matrix to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumMode {
    /// Eigenvalues of the sample covariance (`1/(n-1)`), `d` values.
    Covariance,
    /// Singular values of the column-centered matrix, `min(n, d)` values.
    #[default]
    Singular,
    /// Singular values of the matrix as given, no centering.
    UncenteredSingular,
}

impl std::fmt::Display for SpectrumMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SpectrumMode::Covariance => "covariance",
            SpectrumMode::Singular => "singular",
            SpectrumMode::UncenteredSingular => "uncentered-singular",
        })
    }
}

pub fn compute_spectrum(x: &FeatureMatrix, mode: SpectrumMode) -> Result<Spectrum> {
    let n = x.nrows();
    let d = x.ncols();
    let work = match mode {
        SpectrumMode::UncenteredSingular => x.as_matrix().clone(),
        SpectrumMode::Singular => x.centered(),
        SpectrumMode::Covariance => {
            if n < 2 {
                return Err(Error::InvalidInput(
                    "covariance spectrum needs at least 2 samples".into(),
                ));
            }
            x.centered()
        }
    };
    let mut sv: Vec<f64> = work.singular_values().iter().copied().collect();
    let largest = sv.iter().fold(0.0_f64, |a, &b| a.max(b));
    for v in sv.iter_mut() {
        if *v <= EIGEN_CLAMP_REL * largest {
            *v = 0.0;
        }
    }
    if mode == SpectrumMode::Covariance {
        let denom = (n - 1) as f64;
        sv.iter_mut().for_each(|v| *v = *v * *v / denom);
        sv.resize(d, 0.0);
    }
    Spectrum::new(sv)
}

/// `-Σ p ln p` over the l1-normalized spectrum.
pub fn von_neumann_entropy(s: &Spectrum) -> Result<f64> {
    let p = s.l1_normalized()?;
    Ok(-p
        .values
        .iter()
        .filter(|&&v| v >= ZERO_TERM)
        .map(|&v| v * v.ln())
        .sum::<f64>())
}

/// `exp` of the spectral Shannon entropy.
pub fn effective_rank(s: &Spectrum) -> Result<f64> {
    von_neumann_entropy(s).map(f64::exp)
}

/// Fraction of total mass in the top `ceil(p N)` values.
pub fn cumulative_explained_variance(s: &Spectrum, p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param("p", format!("must lie in (0, 1], got {p}")));
    }
    let total = s.sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateSpectrum("all values are zero".into()));
    }
    let n = s.len();
    // Guard against p*N landing a hair above an integer.
    let k = ((p * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    Ok(s.values[..k].iter().sum::<f64>() / total)
}

/// Count of l1-normalized values strictly above `tau`.
pub fn count_above_threshold(s: &Spectrum, tau: f64) -> Result<usize> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::param("tau", format!("must be positive, got {tau}")));
    }
    let p = s.l1_normalized()?;
    Ok(p.values.iter().filter(|&&v| v > tau).count())
}

/// `ln` of the mean Gaussian potential `exp(-2 |x_i - x_j|²)` over distinct
/// unordered pairs of l2-normalized rows.
pub fn uniformity(x: &FeatureMatrix) -> Result<f64> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InvalidInput("uniformity needs at least 2 rows".into()));
    }
    let u = x.row_normalized()?;
    // Row-major copy for cache-friendly pair loops.
    let d = u.ncols();
    let rows: Vec<f64> = (0..n).flat_map(|i| u.row(i).iter().copied().collect::<Vec<_>>()).collect();
    let mut acc = 0.0;
    for i in 0..n {
        let xi = &rows[i * d..(i + 1) * d];
        for j in (i + 1)..n {
            let xj = &rows[j * d..(j + 1) * d];
            let sq: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
            acc += (-2.0 * sq).exp();
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok((acc / pairs).ln())
}
