//! InfoNCE and VICReg values with their analytic gradients, checked against
//! central finite differences.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use repdyn::toyssl::{adadim_loss, info_nce_loss, vicreg_loss, LossConfig};
use repdyn::{FeatureMatrix, Result};

fn max_fd_error(f: impl Fn(&FeatureMatrix, &FeatureMatrix) -> f64, z: &FeatureMatrix, zp: &FeatureMatrix, grad: &DMatrix<f64>) -> f64 {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for idx in 0..z.as_matrix().len() {
        let bump = |s: f64| {
            let mut m = z.as_matrix().clone();
            m[idx] += s;
            FeatureMatrix::new(m).unwrap()
        };
        let fd = (f(&bump(h), zp) - f(&bump(-h), zp)) / (2.0 * h);
        worst = worst.max((fd - grad[idx]).abs() / fd.abs().max(grad[idx].abs()).max(1e-6));
    }
    worst
}

pub fn run_example() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut sample = || FeatureMatrix::new(DMatrix::from_fn(4, 6, |_, _| rng.random_range(-1.0..1.0)));
    let (z, zp) = (sample()?, sample()?);
    let cfg = LossConfig::default();

    let nce = info_nce_loss(&z, &zp, cfg.tau)?;
    let err = max_fd_error(|a, b| info_nce_loss(a, b, cfg.tau).unwrap().loss, &z, &zp, &nce.grad_z);
    println!("InfoNCE {:.6}, max relative gradient error {err:.2e}", nce.loss);

    let vic = vicreg_loss(&z, &zp, &cfg)?;
    let err = max_fd_error(|a, b| vicreg_loss(a, b, &cfg).unwrap().output.loss, &z, &zp, &vic.output.grad_z);
    println!(
        "VICReg {:.6} (invariance {:.4}, variance {:.4}, covariance {:.4}), max relative gradient error {err:.2e}",
        vic.output.loss, vic.terms.invariance, vic.terms.variance, vic.terms.covariance
    );

    for alpha in [0.0, 0.5, 1.0] {
        println!("alpha {alpha}: combined loss {:.6}", adadim_loss(&z, &zp, alpha, &cfg)?.loss);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
