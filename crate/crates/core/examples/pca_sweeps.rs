//! I(R;Z) of a PCA projection Z of blob data R as the feature count or the
//! cluster spread changes. Pass `full` for 100 repeats per point.

use repdyn::gaussian::{sweep_features, sweep_variance, BlobConfig};
use repdyn::Result;

fn repeats() -> usize {
    if std::env::args().any(|a| a == "full") {
        100
    } else {
        5
    }
}

pub fn run_example() -> Result<()> {
    let repeats = repeats();
    for std in [0.5, 1.0, 2.0] {
        let base = BlobConfig {
            cluster_std: std,
            ..Default::default()
        };
        let curve = sweep_features(&base, &[15, 20, 30, 40, 50], 10, repeats)?;
        println!("features, std {std}: {:.3?}", curve.means());
    }
    let base = BlobConfig::default();
    for k in [2, 10] {
        let curve = sweep_variance(&base, &[0.5, 1.0, 2.0, 4.0, 8.0], k, repeats)?;
        println!("variance, k = {k:>2}: {:.3?}", curve.means());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
