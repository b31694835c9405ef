//! Experiment dispatch, artifact writing and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{Command, ExperimentConfig, MetricKind, MetricsParams};
use crate::error::{Error, Result};
use crate::gaussian::{sweep_features, sweep_variance};
use crate::io::{fmt_real, write_csv_rows};
use crate::spectrum::{
    compute_spectrum, count_above_threshold, cumulative_explained_variance, effective_rank,
    matrix_mutual_information, renyi_matrix_entropy, uniformity, von_neumann_entropy,
};
use crate::toyssl::{save_model, train, write_trajectory_csv};
use crate::{FeatureMatrix, GramMatrix};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SWEEP_REPEATS_FILE: &str = "sweep_repeats.csv";
pub const SWEEP_AGGREGATE_FILE: &str = "sweep_aggregate.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const MODEL_FILE: &str = "model.bin";
pub const METRICS_FILE: &str = "metrics.csv";
pub const METRICS_HEADER: [&str; 5] = ["input", "metric", "param", "spectrum_mode", "value"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// File name inside the output directory.
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: Command,
    pub seed: u64,
    /// The fully resolved config; rerunning it reproduces every artifact.
    pub config: ExperimentConfig,
    pub wall_time_seconds: f64,
    pub artifacts: Vec<Artifact>,
}

fn sha256_file(path: &Path) -> Result<(u64, String)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok((bytes.len() as u64, hex::encode(Sha256::digest(&bytes))))
}

/// Writes artifacts into one directory and remembers them for checksums
/// or cleanup.
struct ArtifactWriter {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<String>,
}

impl ArtifactWriter {
    fn new(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            created_dir,
            written: Vec::new(),
        })
    }

    /// Path for `file`, recorded as an artifact.
    fn claim(&mut self, file: &str) -> PathBuf {
        self.written.push(file.to_string());
        self.dir.join(file)
    }

    fn artifacts(&self) -> Result<Vec<Artifact>> {
        self.written
            .iter()
            .map(|file| {
                let (bytes, sha256) = sha256_file(&self.dir.join(file))?;
                Ok(Artifact {
                    file: file.clone(),
                    bytes,
                    sha256,
                })
            })
            .collect()
    }

    fn write_manifest(&self, manifest: &Manifest) -> Result<()> {
        let json = serde_json::to_string_pretty(manifest).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let tmp = self.dir.join(format!(".{MANIFEST_FILE}.tmp"));
        let dest = self.dir.join(MANIFEST_FILE);
        fs::write(&tmp, json + "\n").map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &dest).map_err(|e| Error::io(&dest, e))
    }

    fn discard(self) {
        for file in self.written.iter().map(String::as_str).chain([".manifest.json.tmp"]) {
            let _ = fs::remove_file(self.dir.join(file));
        }
        if self.created_dir {
            // Only succeeds if nothing else landed there.
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

/// Runs the configured experiment, writes its artifacts and finally the
/// manifest. On failure every file this run wrote is removed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Manifest> {
    cfg.validate()?;
    let start = Instant::now();
    let mut out = ArtifactWriter::new(&cfg.output_dir)?;
    let result = dispatch(cfg, &mut out).and_then(|()| {
        let manifest = Manifest {
            command: cfg.command,
            seed: cfg.seed,
            config: cfg.clone(),
            wall_time_seconds: start.elapsed().as_secs_f64(),
            artifacts: out.artifacts()?,
        };
        out.write_manifest(&manifest)?;
        Ok(manifest)
    });
    match result {
        Ok(manifest) => Ok(manifest),
        Err(e) => {
            out.discard();
            Err(e.with_context(format!("{} experiment", cfg.command)))
        }
    }
}

fn dispatch(cfg: &ExperimentConfig, out: &mut ArtifactWriter) -> Result<()> {
    match cfg.command {
        Command::SweepFeatures | Command::SweepVariance => {
            let base = cfg.blob_config().expect("resolved");
            let s = cfg.sweep.as_ref().expect("resolved");
            let curve = if cfg.command == Command::SweepFeatures {
                log::info!("feature sweep over {:?}, {} repeats", s.feature_counts, s.repeats);
                sweep_features(&base, &s.feature_counts, s.pca_k, s.repeats)?
            } else {
                log::info!("variance sweep over {:?}, {} repeats", s.stds, s.repeats);
                sweep_variance(&base, &s.stds, s.pca_k, s.repeats)?
            };
            curve.write_repeats_csv(&out.claim(SWEEP_REPEATS_FILE))?;
            curve.write_aggregate_csv(&out.claim(SWEEP_AGGREGATE_FILE))
        }
        Command::TrainToy => {
            let run = cfg.run_config()?;
            log::info!("training for {} epochs", run.epochs);
            let outcome = train(&run)?;
            write_trajectory_csv(&outcome.trajectory, &out.claim(TRAJECTORY_FILE))?;
            save_model(&outcome.model, &out.claim(MODEL_FILE))
        }
        Command::Metrics => {
            let m = cfg.metrics.as_ref().expect("resolved");
            let rows = metric_rows(m)?;
            write_csv_rows(&out.claim(METRICS_FILE), &METRICS_HEADER, &rows)
        }
    }
}

/// One row per requested metric and input (`mi` uses both inputs).
pub fn metric_rows(m: &MetricsParams) -> Result<Vec<Vec<String>>> {
    let inputs: Vec<FeatureMatrix> = m
        .inputs
        .iter()
        .map(|p| FeatureMatrix::read_csv(p).map_err(|e| e.with_context(format!("reading {}", p.display()))))
        .collect::<Result<_>>()?;
    let mode = m.spectrum_mode.to_string();
    let mut rows = Vec::new();
    for &metric in &m.metrics {
        if metric == MetricKind::Mi {
            let value = matrix_mutual_information(&inputs[0], &inputs[1], m.renyi_alpha)?;
            let label = format!("{};{}", m.inputs[0].display(), m.inputs[1].display());
            rows.push(vec![label, "mi".into(), fmt_real(m.renyi_alpha), String::new(), fmt_real(value)]);
            continue;
        }
        for (path, x) in m.inputs.iter().zip(&inputs) {
            let ctx = |e: Error| e.with_context(format!("{} of {}", metric.name(), path.display()));
            let spectrum = || compute_spectrum(x, m.spectrum_mode);
            let (param, spectral, value) = match metric {
                MetricKind::Er => (None, true, effective_rank(&spectrum().map_err(ctx)?).map_err(ctx)?),
                MetricKind::Vne => (None, true, von_neumann_entropy(&spectrum().map_err(ctx)?).map_err(ctx)?),
                MetricKind::Cev => (
                    Some(m.cev_fraction),
                    true,
                    cumulative_explained_variance(&spectrum().map_err(ctx)?, m.cev_fraction).map_err(ctx)?,
                ),
                MetricKind::Count => (
                    Some(m.count_threshold),
                    true,
                    count_above_threshold(&spectrum().map_err(ctx)?, m.count_threshold).map_err(ctx)? as f64,
                ),
                MetricKind::Renyi => {
                    let gram = GramMatrix::from_features(x).map_err(ctx)?;
                    (Some(m.renyi_alpha), false, renyi_matrix_entropy(&gram, m.renyi_alpha).map_err(ctx)?)
                }
                MetricKind::Uniformity => (None, false, uniformity(x).map_err(ctx)?),
                MetricKind::Mi => unreachable!("handled above"),
            };
            rows.push(vec![
                path.display().to_string(),
                metric.name().into(),
                param.map(fmt_real).unwrap_or_default(),
                if spectral { mode.clone() } else { String::new() },
                fmt_real(value),
            ]);
        }
    }
    Ok(rows)
}
