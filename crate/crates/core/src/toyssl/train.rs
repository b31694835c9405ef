//! Two-view training loop with trajectory logging.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::alpha::AlphaSchedule;
use super::loss::{adadim_loss, info_nce_loss, vicreg_loss, AdaDimOutput, LossConfig};
use super::mlp::{backward, forward, MlpModel};
use crate::error::{Error, Result};
use crate::gaussian::{generate_blobs, BlobConfig};
use crate::io::{fmt_real, write_csv_rows};
use crate::spectrum::{compute_spectrum, effective_rank, matrix_mutual_information, uniformity, FeatureMatrix, SpectrumMode};

/// Adds elementwise `N(0, σ²)` noise; deterministic per seed.
pub fn augment(x: &FeatureMatrix, sigma: f64, seed: u64) -> Result<FeatureMatrix> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::param("sigma", format!("must be finite and >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(x.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma validated");
    let mut out = x.as_matrix().clone();
    // Row-major draw order, independent of the matrix storage layout.
    for i in 0..out.nrows() {
        for j in 0..out.ncols() {
            out[(i, j)] += normal.sample(&mut rng);
        }
    }
    FeatureMatrix::new(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Blobs(BlobConfig),
    Csv(PathBuf),
}

impl DataSource {
    pub fn load(&self) -> Result<FeatureMatrix> {
        match self {
            DataSource::Blobs(cfg) => generate_blobs(cfg),
            DataSource::Csv(path) => FeatureMatrix::read_csv(path),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AlphaMode {
    /// Constant α; 1 is pure InfoNCE, 0 pure VICReg.
    Fixed { value: f64 },
    /// Recompute α every `e_alpha` epochs from `n_probe_batches`
    /// unaugmented batches of `probe_batch_size` rows (defaults to the
    /// training batch size).
    Adaptive {
        e_alpha: usize,
        n_probe_batches: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        probe_batch_size: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: DataSource,
    /// Output width of each encoder layer.
    pub encoder_widths: Vec<usize>,
    /// Output width of each projector layer.
    pub projector_widths: Vec<usize>,
    pub loss: LossConfig,
    pub alpha: AlphaMode,
    pub epochs: usize,
    /// `None` trains full-batch.
    pub batch_size: Option<usize>,
    pub optimizer: AdamConfig,
    /// Std of the Gaussian noise used to build each view.
    pub noise_sigma: f64,
    /// Record every `log_every` epochs.
    pub log_every: usize,
    /// Rényi order of the logged matrix mutual information.
    pub mi_alpha: f64,
    pub seed: u64,
}

impl RunConfig {
    /// Blobs 1000x25 (std 0.01), encoder 5x20, projector 5-5, σ = 0.5,
    /// Adam lr 1e-4, 1000 full-batch epochs.
    pub fn toy_replica(alpha: AlphaMode, seed: u64) -> Self {
        Self {
            data: DataSource::Blobs(BlobConfig {
                n_samples: 1000,
                n_features: 25,
                n_centers: 5,
                cluster_std: 0.01,
                seed,
                ..Default::default()
            }),
            encoder_widths: vec![20; 5],
            projector_widths: vec![5, 5],
            loss: LossConfig::default(),
            alpha,
            epochs: 1000,
            batch_size: None,
            optimizer: AdamConfig::default(),
            noise_sigma: 0.5,
            log_every: 1,
            mi_alpha: 2.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        self.optimizer.validate()?;
        if self.encoder_widths.is_empty() || self.projector_widths.is_empty() {
            return Err(Error::param("encoder_widths", "encoder and projector need layers"));
        }
        if let AlphaMode::Fixed { value } = self.alpha {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::param("alpha", format!("fixed value must lie in [0, 1], got {value}")));
            }
        }
        if let AlphaMode::Adaptive { e_alpha, n_probe_batches, probe_batch_size } = self.alpha {
            if e_alpha < 1 || n_probe_batches < 1 || probe_batch_size.is_some_and(|b| b < 2) {
                return Err(Error::param(
                    "alpha",
                    "adaptive mode needs e_alpha >= 1, n_probe_batches >= 1, probe_batch_size >= 2",
                ));
            }
        }
        if self.batch_size.is_some_and(|b| b < 2) {
            return Err(Error::param("batch_size", "must be at least 2"));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::param("noise_sigma", "must be >= 0"));
        }
        if self.log_every < 1 {
            return Err(Error::param("log_every", "must be at least 1"));
        }
        if !(self.mi_alpha > 0.0) || self.mi_alpha == 1.0 {
            return Err(Error::param("mi_alpha", "must be positive and != 1"));
        }
        Ok(())
    }
}

/// One logged epoch. Losses are means over the epoch's batches; the
/// representation metrics are evaluated on the full unaugmented dataset
/// after the epoch's updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub epoch: usize,
    pub loss_total: f64,
    pub loss_nce: f64,
    pub loss_vicreg: f64,
    pub alpha: f64,
    pub er_r: f64,
    pub er_z: f64,
    pub mi_rz: f64,
    pub uniformity_r: f64,
    pub uniformity_z: f64,
}

pub const TRAJECTORY_HEADER: [&str; 10] = [
    "epoch",
    "loss_total",
    "loss_nce",
    "loss_vicreg",
    "alpha",
    "er_r",
    "er_z",
    "mi_rz",
    "uniformity_r",
    "uniformity_z",
];

pub fn write_trajectory_csv(records: &[TrajectoryRecord], path: &Path) -> Result<()> {
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            let mut row = vec![r.epoch.to_string()];
            row.extend(
                [
                    r.loss_total,
                    r.loss_nce,
                    r.loss_vicreg,
                    r.alpha,
                    r.er_r,
                    r.er_z,
                    r.mi_rz,
                    r.uniformity_r,
                    r.uniformity_z,
                ]
                .into_iter()
                .map(fmt_real),
            );
            row
        })
        .collect();
    write_csv_rows(path, &TRAJECTORY_HEADER, &rows)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub trajectory: Vec<TrajectoryRecord>,
    pub model: MlpModel,
    /// `(epoch, α)` at every adaptive recomputation.
    pub alpha_updates: Vec<(usize, f64)>,
}

/// Independent RNG stream per concern so adding one draw never shifts another.
fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Representation metrics on the full dataset.
pub fn evaluate_representations(model: &MlpModel, data: &FeatureMatrix, mi_alpha: f64) -> Result<[f64; 5]> {
    let (r, z) = model.embed(data)?;
    let er_r = effective_rank(&compute_spectrum(&r, SpectrumMode::Singular)?)?;
    let er_z = effective_rank(&compute_spectrum(&z, SpectrumMode::Singular)?)?;
    let mi = matrix_mutual_information(&r, &z, mi_alpha)?;
    Ok([er_r, er_z, mi, uniformity(&r)?, uniformity(&z)?])
}

/// The α-weighted loss. A component with zero weight is only evaluated when
/// its value will be logged; otherwise it is reported as NaN.
fn combined_loss(z: &FeatureMatrix, zp: &FeatureMatrix, alpha: f64, cfg: &LossConfig, full: bool) -> Result<AdaDimOutput> {
    if !full && alpha == 1.0 {
        let nce = info_nce_loss(z, zp, cfg.tau)?;
        return Ok(AdaDimOutput {
            loss: nce.loss,
            nce: nce.loss,
            vicreg: f64::NAN,
            grad_z: nce.grad_z,
            grad_zp: nce.grad_zp,
        });
    }
    if !full && alpha == 0.0 {
        let vic = vicreg_loss(z, zp, cfg)?.output;
        return Ok(AdaDimOutput {
            loss: vic.loss,
            nce: f64::NAN,
            vicreg: vic.loss,
            grad_z: vic.grad_z,
            grad_zp: vic.grad_zp,
        });
    }
    adadim_loss(z, zp, alpha, cfg)
}

pub fn train(cfg: &RunConfig) -> Result<TrainOutcome> {
    let data = cfg.data.load()?;
    train_on(&data, cfg)
}

/// Runs the loop on an explicit data matrix; `cfg.data` is ignored.
pub fn train_on(data: &FeatureMatrix, cfg: &RunConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let n = data.nrows();
    if n < 2 {
        return Err(Error::DegenerateBatch("training data needs at least 2 rows".into()));
    }
    let mut init_rng = stream(cfg.seed, 0);
    let mut order_rng = stream(cfg.seed, 1);
    let mut noise_rng = stream(cfg.seed, 2);
    let mut probe_rng = stream(cfg.seed, 3);

    let mut model = MlpModel::init(data.ncols(), &cfg.encoder_widths, &cfg.projector_widths, &mut init_rng)?;
    let mut adam = AdamState::for_model(&model);

    let batch_size = cfg.batch_size.unwrap_or(n).min(n);
    let (mut alpha, mut schedule, probe_size) = match cfg.alpha {
        AlphaMode::Fixed { value } => (value, None, 0),
        AlphaMode::Adaptive { e_alpha, n_probe_batches, probe_batch_size } => {
            let probe = probe_batch_size.unwrap_or(batch_size).min(n);
            // A batch smaller than the feature dimension caps the attainable rank.
            let sched = AlphaSchedule::new(e_alpha, n_probe_batches, model.representation_dim().min(probe))?;
            (sched.current_alpha, Some(sched), probe)
        }
    };

    let mut trajectory = Vec::new();
    let mut alpha_updates = Vec::new();
    let mut indices: Vec<usize> = (0..n).collect();

    for epoch in 1..=cfg.epochs {
        let diverged = |reason: String| Error::TrainingDivergence {
            epoch,
            last_good_epoch: epoch - 1,
            reason,
        };

        if let Some(sched) = schedule.as_mut().filter(|s| s.due(epoch)) {
            let mut probes = Vec::with_capacity(sched.n_probe_batches);
            for _ in 0..sched.n_probe_batches {
                let mut pool: Vec<usize> = (0..n).collect();
                let (picked, _) = pool.partial_shuffle(&mut probe_rng, probe_size);
                probes.push(model.encode(&data.select_rows(picked)?)?);
            }
            alpha = sched
                .refresh(&probes)
                .map_err(|e| e.with_context(format!("recomputing alpha before epoch {epoch}")))?;
            alpha_updates.push((epoch, alpha));
        }

        if batch_size < n {
            indices.shuffle(&mut order_rng);
        }
        let log_epoch = epoch % cfg.log_every == 0;
        let (mut sum_total, mut sum_nce, mut sum_vic, mut batches) = (0.0, 0.0, 0.0, 0usize);
        for chunk in indices.chunks(batch_size).filter(|c| c.len() >= 2) {
            let x = if chunk.len() == n && batch_size == n {
                data.clone()
            } else {
                data.select_rows(chunk)?
            };
            let view_a = augment(&x, cfg.noise_sigma, noise_rng.next_u64())?;
            let view_b = augment(&x, cfg.noise_sigma, noise_rng.next_u64())?;
            let pass_a = forward(&model, &view_a).map_err(|e| diverged(e.to_string()))?;
            let pass_b = forward(&model, &view_b).map_err(|e| diverged(e.to_string()))?;
            let out = combined_loss(&pass_a.z, &pass_b.z, alpha, &cfg.loss, log_epoch)?;
            if !out.loss.is_finite() {
                return Err(diverged(format!("loss is {}", out.loss)));
            }
            let mut grads = backward(&model, &pass_a.cache, &out.grad_z, None)?;
            grads.add_assign(&backward(&model, &pass_b.cache, &out.grad_zp, None)?);
            adam_step(&mut model, &grads, &mut adam, &cfg.optimizer).map_err(|e| match e {
                Error::TrainingDivergence { reason, .. } => diverged(reason),
                other => other,
            })?;
            sum_total += out.loss;
            sum_nce += out.nce;
            sum_vic += out.vicreg;
            batches += 1;
        }

        if log_epoch {
            let b = batches.max(1) as f64;
            let [er_r, er_z, mi_rz, uniformity_r, uniformity_z] =
                evaluate_representations(&model, data, cfg.mi_alpha).map_err(|e| match e {
                    Error::InvalidInput(msg) => diverged(msg),
                    other => other.with_context(format!("metrics at epoch {epoch}")),
                })?;
            trajectory.push(TrajectoryRecord {
                epoch,
                loss_total: sum_total / b,
                loss_nce: sum_nce / b,
                loss_vicreg: sum_vic / b,
                alpha,
                er_r,
                er_z,
                mi_rz,
                uniformity_r,
                uniformity_z,
            });
        }
    }
    Ok(TrainOutcome {
        trajectory,
        model,
        alpha_updates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(alpha: AlphaMode) -> RunConfig {
        RunConfig {
            data: DataSource::Blobs(BlobConfig {
                n_samples: 60,
                n_features: 6,
                n_centers: 3,
                cluster_std: 0.5,
                ..Default::default()
            }),
            encoder_widths: vec![8, 8],
            projector_widths: vec![4],
            epochs: 6,
            batch_size: Some(16),
            ..RunConfig::toy_replica(alpha, 3)
        }
    }

    #[test]
    fn augment_contract() {
        let x = FeatureMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(augment(&x, 0.0, 1).unwrap(), x);
        assert_eq!(augment(&x, 0.5, 9).unwrap(), augment(&x, 0.5, 9).unwrap());
        assert_ne!(augment(&x, 0.5, 9).unwrap(), augment(&x, 0.5, 10).unwrap());
        assert!(augment(&x, -0.1, 1).is_err());
    }

    #[test]
    fn zero_epochs_is_a_no_op() {
        let mut cfg = tiny(AlphaMode::Fixed { value: 1.0 });
        cfg.epochs = 0;
        let out = train(&cfg).unwrap();
        assert!(out.trajectory.is_empty());
        let data = cfg.data.load().unwrap();
        let fresh = MlpModel::init(data.ncols(), &cfg.encoder_widths, &cfg.projector_widths, &mut stream(cfg.seed, 0)).unwrap();
        assert_eq!(out.model, fresh);
    }

    #[test]
    fn runs_are_bit_reproducible() {
        let cfg = tiny(AlphaMode::Adaptive {
            e_alpha: 2,
            n_probe_batches: 3,
            probe_batch_size: None,
        });
        let a = train(&cfg).unwrap();
        let b = train(&cfg).unwrap();
        assert_eq!(a.trajectory, b.trajectory);
        assert_eq!(a.model, b.model);
        assert_eq!(a.alpha_updates.iter().map(|u| u.0).collect::<Vec<_>>(), vec![1, 3, 5]);
        for rec in &a.trajectory {
            assert!((0.0..=1.0).contains(&rec.alpha));
            assert!(rec.er_r >= 1.0 - 1e-12 && rec.er_r <= 8.0 + 1e-9);
        }
    }

    #[test]
    fn log_cadence() {
        let mut cfg = tiny(AlphaMode::Fixed { value: 0.0 });
        cfg.log_every = 3;
        let out = train(&cfg).unwrap();
        assert_eq!(out.trajectory.iter().map(|r| r.epoch).collect::<Vec<_>>(), vec![3, 6]);
    }

    #[test]
    fn logging_cadence_does_not_change_training() {
        for value in [0.0, 1.0] {
            let dense = train(&tiny(AlphaMode::Fixed { value })).unwrap();
            let mut cfg = tiny(AlphaMode::Fixed { value });
            cfg.log_every = 3;
            let sparse = train(&cfg).unwrap();
            assert_eq!(dense.model, sparse.model);
            assert_eq!(dense.trajectory[2], sparse.trajectory[0]);
        }
    }

    #[test]
    fn huge_learning_rate_reports_divergence() {
        let mut cfg = tiny(AlphaMode::Fixed { value: 0.0 });
        cfg.optimizer.lr = 1e200;
        cfg.epochs = 50;
        match train(&cfg) {
            Err(Error::TrainingDivergence { epoch, last_good_epoch, .. }) => assert_eq!(last_good_epoch + 1, epoch),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
