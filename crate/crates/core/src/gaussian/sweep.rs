//! Feature-count and variance sweeps of `I(R;Z)` with `Z` a PCA projection of
//! blob data `R`.

use std::path::Path;

use rayon::prelude::*;

use super::{empirical_block_covariance, fit_pca, gaussian_entropy, gaussian_mutual_info, generate_blobs, project, BlobConfig};
use crate::error::{Error, Result};
use crate::io::{fmt_real, write_csv_rows};
use crate::spectrum::{compute_spectrum, effective_rank, SpectrumMode};

/// One pipeline evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepeatSample {
    pub repeat: usize,
    pub seed: u64,
    pub mi: f64,
    pub entropy_r: f64,
    pub effective_rank_r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    /// Feature count or cluster std, depending on the sweep.
    pub param: f64,
    pub mi_mean: f64,
    /// Population standard deviation over repeats.
    pub mi_std: f64,
    pub repeats: Vec<RepeatSample>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepCurve {
    pub points: Vec<SweepPoint>,
}

impl SweepCurve {
    pub fn params(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.param).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mi_mean).collect()
    }

    /// `param,repeat,seed,mi,entropy_r,effective_rank_r`, one row per repeat.
    pub fn write_repeats_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .points
            .iter()
            .flat_map(|p| {
                p.repeats.iter().map(move |r| {
                    vec![
                        fmt_real(p.param),
                        r.repeat.to_string(),
                        r.seed.to_string(),
                        fmt_real(r.mi),
                        fmt_real(r.entropy_r),
                        fmt_real(r.effective_rank_r),
                    ]
                })
            })
            .collect();
        write_csv_rows(
            path,
            &["param", "repeat", "seed", "mi", "entropy_r", "effective_rank_r"],
            &rows,
        )
    }

    /// `param,mi_mean,mi_std`.
    pub fn write_aggregate_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .points
            .iter()
            .map(|p| vec![fmt_real(p.param), fmt_real(p.mi_mean), fmt_real(p.mi_std)])
            .collect();
        write_csv_rows(path, &["param", "mi_mean", "mi_std"], &rows)
    }
}

/// Blobs → PCA(`pca_k`) → empirical block covariance → closed-form MI,
/// with the default ridge.
pub fn evaluate_pipeline(cfg: &BlobConfig, pca_k: usize) -> Result<(f64, f64, f64)> {
    let r = generate_blobs(cfg)?;
    let pca = fit_pca(&r, pca_k)?;
    let z = project(&pca, &r)?;
    let cov = empirical_block_covariance(&r, &z)?;
    let mi = gaussian_mutual_info(&cov, cov.default_ridge())?;
    let entropy_r = gaussian_entropy(cov.sigma_r())?;
    let er = effective_rank(&compute_spectrum(&r, SpectrumMode::Covariance)?)?;
    Ok((mi, entropy_r, er))
}

fn run_point(base: &BlobConfig, param: f64, pca_k: usize, repeats: usize) -> Result<SweepPoint> {
    // Repeats run in parallel; collect() keeps them in repeat order.
    let samples: Vec<RepeatSample> = (0..repeats)
        .into_par_iter()
        .map(|repeat| {
            let seed = base.seed.wrapping_add(repeat as u64);
            let cfg = BlobConfig { seed, ..base.clone() };
            let (mi, entropy_r, effective_rank_r) = evaluate_pipeline(&cfg, pca_k)
                .map_err(|e| e.with_context(format!("sweep param {param}, repeat {repeat}")))?;
            Ok(RepeatSample {
                repeat,
                seed,
                mi,
                entropy_r,
                effective_rank_r,
            })
        })
        .collect::<Result<_>>()?;
    let count = samples.len() as f64;
    let mean = samples.iter().map(|s| s.mi).sum::<f64>() / count;
    let var = samples.iter().map(|s| (s.mi - mean).powi(2)).sum::<f64>() / count;
    Ok(SweepPoint {
        param,
        mi_mean: mean,
        mi_std: var.sqrt(),
        repeats: samples,
    })
}

fn check_common(pca_k: usize, repeats: usize) -> Result<()> {
    if pca_k < 1 {
        return Err(Error::param("pca_k", "must be at least 1"));
    }
    if repeats < 1 {
        return Err(Error::param("repeats", "must be at least 1"));
    }
    Ok(())
}

/// Varies `n_features` with `cluster_std` fixed. Repeat `i` uses seed
/// `base.seed + i` at every feature count.
pub fn sweep_features(base: &BlobConfig, feature_counts: &[usize], pca_k: usize, repeats: usize) -> Result<SweepCurve> {
    check_common(pca_k, repeats)?;
    if feature_counts.is_empty() {
        return Err(Error::param("feature_counts", "must be nonempty"));
    }
    if let Some(&bad) = feature_counts.iter().find(|&&m| m < pca_k + 1) {
        return Err(Error::param(
            "feature_counts",
            format!("every count must be >= pca_k + 1 = {}, got {bad}", pca_k + 1),
        ));
    }
    let points = feature_counts
        .iter()
        .map(|&m| {
            let cfg = BlobConfig {
                n_features: m,
                ..base.clone()
            };
            run_point(&cfg, m as f64, pca_k, repeats)
        })
        .collect::<Result<_>>()?;
    Ok(SweepCurve { points })
}

/// Varies `cluster_std` with `n_features` fixed.
pub fn sweep_variance(base: &BlobConfig, stds: &[f64], pca_k: usize, repeats: usize) -> Result<SweepCurve> {
    check_common(pca_k, repeats)?;
    if stds.is_empty() {
        return Err(Error::param("stds", "must be nonempty"));
    }
    if let Some(&bad) = stds.iter().find(|&&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::param("stds", format!("every std must be positive, got {bad}")));
    }
    let points = stds
        .iter()
        .map(|&s| {
            let cfg = BlobConfig {
                cluster_std: s,
                ..base.clone()
            };
            run_point(&cfg, s, pca_k, repeats)
        })
        .collect::<Result<_>>()?;
    Ok(SweepCurve { points })
}
