//! Closed-form Gaussian I(R;Z) through both Schur complements and the
//! K/V/D decomposition of the upper bound on I(Y;R).

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use repdyn::gaussian::{
    bound_decomposition, empirical_block_covariance, gaussian_entropy, gaussian_mutual_info, generate_blobs, schur_terms,
    BlobConfig, BlockCovariance,
};
use repdyn::{FeatureMatrix, Result};

pub fn run_example() -> Result<()> {
    let rho: f64 = 0.5;
    let c = BlockCovariance::new(
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, rho),
    )?;
    println!(
        "bivariate rho = {rho}: I = {:.6}, analytic -0.5 ln(1 - rho^2) = {:.6}",
        gaussian_mutual_info(&c, 0.0)?,
        -0.5 * (1.0 - rho * rho).ln()
    );

    // Z is a noisy 3-dimensional linear readout of 6-dimensional blob data R.
    let r = generate_blobs(&BlobConfig {
        n_samples: 2000,
        n_features: 6,
        ..Default::default()
    })?;
    let w = DMatrix::from_fn(6, 3, |i, j| if i == j { 1.0 } else { 0.1 * (i + j) as f64 });
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noise = DMatrix::from_fn(2000, 3, |_, _| 0.5 * rng.sample::<f64, _>(StandardNormal));
    let z = FeatureMatrix::new(r.as_matrix() * w + noise)?;
    let c = empirical_block_covariance(&r, &z)?;
    let t = schur_terms(&c, c.default_ridge())?;
    println!("via Var(Z|R): {:.6}   via Var(R|Z): {:.6}", t.mi_via_z(), t.mi_via_r());

    let mi = gaussian_mutual_info(&c, 0.0)?;
    let h = gaussian_entropy(c.sigma_r())?;
    let b = bound_decomposition(&c, 0.0)?;
    println!(
        "K {:.4} + V {:.4} + D {:.4} = {:.6}; H(R) - I(R;Z) = {:.6}",
        b.k_term,
        b.v_term,
        b.d_term,
        b.k_term + b.v_term + b.d_term,
        h - mi
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
