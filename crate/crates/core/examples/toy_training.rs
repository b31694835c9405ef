//! Two-view training of the toy encoder/projector with SimCLR (α = 1) and
//! VICReg (α = 0), logging I(R;Z) and effective ranks. Pass `full` for the
//! 1000-epoch run on 1000 samples; the default is a short, smaller run.

use repdyn::gaussian::BlobConfig;
use repdyn::toyssl::{train, AlphaMode, DataSource, RunConfig};
use repdyn::Result;

fn config(alpha: f64, full: bool) -> RunConfig {
    let mut cfg = RunConfig::toy_replica(AlphaMode::Fixed { value: alpha }, 0);
    if !full {
        cfg.data = DataSource::Blobs(BlobConfig {
            n_samples: 200,
            cluster_std: 0.01,
            ..Default::default()
        });
        cfg.epochs = 60;
        cfg.optimizer.lr = 1e-3;
    }
    cfg.log_every = cfg.epochs / 6;
    cfg
}

pub fn run_example() -> Result<()> {
    let full = std::env::args().any(|a| a == "full");
    for (name, alpha) in [("SimCLR", 1.0), ("VICReg", 0.0)] {
        let out = train(&config(alpha, full))?;
        println!("{name}");
        for r in &out.trajectory {
            println!(
                "  epoch {:>4}  loss {:>9.4}  ER(R) {:.3}  ER(Z) {:.3}  I(R;Z) {:.4}  unif(R) {:.3}",
                r.epoch, r.loss_total, r.er_r, r.er_z, r.mi_rz, r.uniformity_r
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
