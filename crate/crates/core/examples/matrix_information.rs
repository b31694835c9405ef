//! Matrix-based Rényi entropy and mutual information of Gram matrices.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use repdyn::gaussian::{generate_blobs, BlobConfig};
use repdyn::spectrum::{matrix_entropy_me, matrix_mutual_information, renyi_matrix_entropy};
use repdyn::{FeatureMatrix, GramMatrix, Result};

pub fn run_example() -> Result<()> {
    let x = generate_blobs(&BlobConfig {
        n_samples: 200,
        n_features: 8,
        n_centers: 4,
        ..Default::default()
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let noise = FeatureMatrix::new(DMatrix::from_fn(200, 8, |_, _| rng.sample(StandardNormal)))?;
    // A linear image of x keeps most of the sample geometry.
    let mixed = FeatureMatrix::new(x.as_matrix() * DMatrix::from_fn(8, 3, |i, j| ((i + 2 * j) % 5) as f64 - 2.0))?;

    let g = GramMatrix::from_features(&x)?;
    println!("n = {}, ln n = {:.3}", g.size(), (g.size() as f64).ln());
    for alpha in [0.5, 2.0, 3.0] {
        println!("H_{alpha}(X) = {:.4}", renyi_matrix_entropy(&g, alpha)?);
    }
    println!("ME(X) = {:.4}", matrix_entropy_me(&g)?);
    println!("I(X; linear image) = {:.4}", matrix_mutual_information(&x, &mixed, 2.0)?);
    println!("I(X; independent noise) = {:.4}", matrix_mutual_information(&x, &noise, 2.0)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
