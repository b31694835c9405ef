//! The adaptive α = ER / D schedule: α is recomputed from probe batches every
//! `e_alpha` epochs and held constant in between.

use repdyn::gaussian::BlobConfig;
use repdyn::toyssl::{compute_alpha, train, AlphaMode, DataSource, RunConfig};
use repdyn::{FeatureMatrix, Result};

pub fn run_example() -> Result<()> {
    // Direct use: a rank-one batch has α = 1/D, an isotropic one α near 1.
    let line: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64; 4]).collect();
    let axes: Vec<Vec<f64>> = (0..4)
        .flat_map(|j| [1.0, -1.0].map(|s| (0..4).map(|k| if k == j { s } else { 0.0 }).collect()))
        .collect();
    println!(
        "alpha(rank one) = {:.3}, alpha(axes) = {:.3}",
        compute_alpha(&[FeatureMatrix::from_rows(&line)?], 4)?,
        compute_alpha(&[FeatureMatrix::from_rows(&axes)?], 4)?
    );

    let mut cfg = RunConfig::toy_replica(
        AlphaMode::Adaptive {
            e_alpha: 10,
            n_probe_batches: 4,
            probe_batch_size: Some(64),
        },
        0,
    );
    cfg.data = DataSource::Blobs(BlobConfig {
        n_samples: 256,
        cluster_std: 0.01,
        ..Default::default()
    });
    cfg.epochs = 50;
    cfg.batch_size = Some(64);
    cfg.optimizer.lr = 1e-3;
    let out = train(&cfg)?;
    for (epoch, alpha) in &out.alpha_updates {
        println!("epoch {epoch:>3}: alpha = {alpha:.4}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
