//! Spectrum-based dimensionality metrics on blob data and a collapsed copy.

use repdyn::gaussian::{generate_blobs, BlobConfig};
use repdyn::spectrum::{
    compute_spectrum, count_above_threshold, cumulative_explained_variance, effective_rank, uniformity,
    von_neumann_entropy,
};
use repdyn::{FeatureMatrix, Result, SpectrumMode};

pub fn run_example() -> Result<()> {
    let x = generate_blobs(&BlobConfig {
        n_samples: 300,
        n_features: 12,
        n_centers: 6,
        ..Default::default()
    })?;
    // Project onto the first two coordinates: a dimensionally collapsed copy.
    let mut collapsed = x.as_matrix().clone();
    collapsed.columns_mut(2, 10).fill(0.0);
    let collapsed = FeatureMatrix::new(collapsed)?;

    for (name, data) in [("blobs", &x), ("collapsed", &collapsed)] {
        let s = compute_spectrum(data, SpectrumMode::Singular)?;
        println!(
            "{name:>9}: ER {:.3}  VNE {:.3}  top-10% CEV {:.3}  count(>0.01) {}  uniformity {:.3}",
            effective_rank(&s)?,
            von_neumann_entropy(&s)?,
            cumulative_explained_variance(&s, 0.1)?,
            count_above_threshold(&s, 0.01)?,
            uniformity(data)?,
        );
    }
    let cov = compute_spectrum(&x, SpectrumMode::Covariance)?;
    println!("covariance spectrum of blobs: ER {:.3}", effective_rank(&cov)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
