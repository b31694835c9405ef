use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::FeatureMatrix;

/// Isotropic Gaussian clusters around uniformly placed centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlobConfig {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_centers: usize,
    pub cluster_std: f64,
    /// Each center coordinate is drawn uniformly from `[lo, hi]`.
    pub center_box: [f64; 2],
    pub seed: u64,
}

impl Default for BlobConfig {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            n_features: 25,
            n_centers: 5,
            cluster_std: 1.0,
            center_box: [-10.0, 10.0],
            seed: 0,
        }
    }
}

impl BlobConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_centers < 1 {
            return Err(Error::param("n_centers", "must be at least 1"));
        }
        if self.n_samples < self.n_centers {
            return Err(Error::param(
                "n_samples",
                format!("must be at least n_centers ({})", self.n_centers),
            ));
        }
        if self.n_features < 1 {
            return Err(Error::param("n_features", "must be at least 1"));
        }
        if !(self.cluster_std >= 0.0) || !self.cluster_std.is_finite() {
            return Err(Error::param(
                "cluster_std",
                format!("must be finite and >= 0, got {}", self.cluster_std),
            ));
        }
        let [lo, hi] = self.center_box;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::param(
                "center_box",
                format!("must be a finite interval lo < hi, got [{lo}, {hi}]"),
            ));
        }
        Ok(())
    }
}

/// Samples plus the index of the center each row was drawn around.
#[derive(Debug, Clone)]
pub struct Blobs {
    pub features: FeatureMatrix,
    pub labels: Vec<usize>,
    pub centers: FeatureMatrix,
}

/// Blob samples only; see [`generate_labeled_blobs`] for labels and centers.
pub fn generate_blobs(cfg: &BlobConfig) -> Result<FeatureMatrix> {
    Ok(generate_labeled_blobs(cfg)?.features)
}

/// Centers are drawn first, then sample `i` is placed around center
/// `i mod n_centers` with per-coordinate noise of std `cluster_std`.
pub fn generate_labeled_blobs(cfg: &BlobConfig) -> Result<Blobs> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let m = cfg.n_features;
    let [lo, hi] = cfg.center_box;
    let centers: Vec<f64> = (0..cfg.n_centers * m).map(|_| rng.random_range(lo..hi)).collect();
    let mut data = Vec::with_capacity(cfg.n_samples * m);
    let mut labels = Vec::with_capacity(cfg.n_samples);
    for i in 0..cfg.n_samples {
        let c = i % cfg.n_centers;
        labels.push(c);
        for j in 0..m {
            let noise: f64 = rng.sample(StandardNormal);
            data.push(centers[c * m + j] + cfg.cluster_std * noise);
        }
    }
    Ok(Blobs {
        features: FeatureMatrix::from_row_slice(cfg.n_samples, m, &data)?,
        labels,
        centers: FeatureMatrix::from_row_slice(cfg.n_centers, m, &centers)?,
    })
}
