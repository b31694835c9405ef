//! Adaptive interpolation weight `α = ER / D` between InfoNCE and VICReg.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{compute_spectrum, effective_rank, FeatureMatrix, SpectrumMode};

/// Mean effective rank of the centered singular spectra of `probe_batches`,
/// divided by `max_dim` and clamped to `[0, 1]`.
pub fn compute_alpha(probe_batches: &[FeatureMatrix], max_dim: usize) -> Result<f64> {
    if probe_batches.is_empty() {
        return Err(Error::param("probe_batches", "need at least one batch"));
    }
    if max_dim == 0 {
        return Err(Error::param("max_dim", "must be positive"));
    }
    let mut total = 0.0;
    for (i, batch) in probe_batches.iter().enumerate() {
        if batch.nrows() < 2 {
            return Err(Error::DegenerateBatch(format!("probe batch {i} has fewer than 2 rows")));
        }
        let spectrum = compute_spectrum(batch, SpectrumMode::Singular)?;
        total += effective_rank(&spectrum).map_err(|e| e.with_context(format!("probe batch {i}")))?;
    }
    let mean = total / probe_batches.len() as f64;
    Ok((mean / max_dim as f64).clamp(0.0, 1.0))
}

/// Recomputation cadence and current value of the adaptive α.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSchedule {
    pub e_alpha: usize,
    pub n_probe_batches: usize,
    pub max_dim: usize,
    pub current_alpha: f64,
}

impl AlphaSchedule {
    pub fn new(e_alpha: usize, n_probe_batches: usize, max_dim: usize) -> Result<Self> {
        if e_alpha < 1 {
            return Err(Error::param("e_alpha", "must be at least 1"));
        }
        if n_probe_batches < 1 {
            return Err(Error::param("n_probe_batches", "must be at least 1"));
        }
        if max_dim < 1 {
            return Err(Error::param("max_dim", "must be at least 1"));
        }
        Ok(Self {
            e_alpha,
            n_probe_batches,
            max_dim,
            current_alpha: 1.0,
        })
    }

    /// Whether α is recomputed before the updates of 1-based `epoch`:
    /// epochs 1, e_α + 1, 2 e_α + 1, ...
    pub fn due(&self, epoch: usize) -> bool {
        epoch >= 1 && (epoch - 1) % self.e_alpha == 0
    }

    pub fn refresh(&mut self, probe_batches: &[FeatureMatrix]) -> Result<f64> {
        self.current_alpha = compute_alpha(probe_batches, self.max_dim)?;
        Ok(self.current_alpha)
    }
}
