//! TOML experiment configs.
//!
//! ```toml
//! command = "train-toy"
//! seed = 7
//! output_dir = "runs/simclr"
//!
//! [blobs]
//! cluster_std = 0.01
//!
//! [train]
//! epochs = 1000
//! alpha = { mode = "fixed", value = 1.0 }
//! ```
//!
//! Sections a command does not use are rejected, as are unknown keys.
//! Parsing fills in every default so the resolved config is fully explicit.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::BlobConfig;
use crate::toyssl::{AdamConfig, AlphaMode, DataSource, LossConfig, RunConfig};
use crate::SpectrumMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SweepFeatures,
    SweepVariance,
    TrainToy,
    Metrics,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SweepFeatures => "sweep-features",
            Command::SweepVariance => "sweep-variance",
            Command::TrainToy => "train-toy",
            Command::Metrics => "metrics",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Blob parameters without a seed; the experiment seed is used instead.
/// Unset fields take command-specific defaults during resolution.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_features: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_centers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster_std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_box: Option<[f64; 2]>,
}

impl BlobParams {
    fn resolve(&mut self, defaults: &BlobConfig) {
        self.n_samples.get_or_insert(defaults.n_samples);
        self.n_features.get_or_insert(defaults.n_features);
        self.n_centers.get_or_insert(defaults.n_centers);
        self.cluster_std.get_or_insert(defaults.cluster_std);
        self.center_box.get_or_insert(defaults.center_box);
    }

    pub fn to_config(&self, seed: u64) -> BlobConfig {
        let d = BlobConfig::default();
        BlobConfig {
            n_samples: self.n_samples.unwrap_or(d.n_samples),
            n_features: self.n_features.unwrap_or(d.n_features),
            n_centers: self.n_centers.unwrap_or(d.n_centers),
            cluster_std: self.cluster_std.unwrap_or(d.cluster_std),
            center_box: self.center_box.unwrap_or(d.center_box),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepParams {
    pub pca_k: usize,
    pub repeats: usize,
    /// Used by `sweep-features`.
    pub feature_counts: Vec<usize>,
    /// Used by `sweep-variance`.
    pub stds: Vec<f64>,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            pca_k: 10,
            repeats: 100,
            feature_counts: vec![15, 20, 30, 40, 50],
            stds: vec![0.5, 1.0, 2.0, 4.0, 8.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainParams {
    /// Train on this CSV instead of generated blobs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_csv: Option<PathBuf>,
    pub encoder_widths: Vec<usize>,
    pub projector_widths: Vec<usize>,
    pub epochs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    pub noise_sigma: f64,
    pub log_every: usize,
    pub mi_alpha: f64,
    pub alpha: AlphaMode,
    pub loss: LossConfig,
    pub optimizer: AdamConfig,
}

impl Default for TrainParams {
    fn default() -> Self {
        let r = RunConfig::toy_replica(AlphaMode::Fixed { value: 1.0 }, 0);
        Self {
            input_csv: None,
            encoder_widths: r.encoder_widths,
            projector_widths: r.projector_widths,
            epochs: r.epochs,
            batch_size: r.batch_size,
            noise_sigma: r.noise_sigma,
            log_every: r.log_every,
            mi_alpha: r.mi_alpha,
            alpha: r.alpha,
            loss: r.loss,
            optimizer: r.optimizer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    /// Effective rank of the spectrum.
    Er,
    /// Von Neumann entropy of the spectrum.
    Vne,
    /// Rényi matrix entropy of the row Gram matrix.
    Renyi,
    /// Matrix mutual information between two inputs.
    Mi,
    /// Cumulative explained variance of the top fraction of the spectrum.
    Cev,
    /// Count of normalized spectrum values above the threshold.
    Count,
    Uniformity,
}

impl MetricKind {
    pub const ALL: [MetricKind; 7] = [
        MetricKind::Er,
        MetricKind::Vne,
        MetricKind::Renyi,
        MetricKind::Mi,
        MetricKind::Cev,
        MetricKind::Count,
        MetricKind::Uniformity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Er => "er",
            MetricKind::Vne => "vne",
            MetricKind::Renyi => "renyi",
            MetricKind::Mi => "mi",
            MetricKind::Cev => "cev",
            MetricKind::Count => "count",
            MetricKind::Uniformity => "uniformity",
        }
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricKind::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::Config {
                key: "metrics.metrics".into(),
                reason: format!("unknown metric `{s}`; expected one of er, vne, renyi, mi, cev, count, uniformity"),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsParams {
    pub inputs: Vec<PathBuf>,
    pub metrics: Vec<MetricKind>,
    pub spectrum_mode: SpectrumMode,
    pub renyi_alpha: f64,
    pub cev_fraction: f64,
    pub count_threshold: f64,
}

impl Default for MetricsParams {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            metrics: vec![MetricKind::Er, MetricKind::Vne],
            spectrum_mode: SpectrumMode::default(),
            renyi_alpha: 2.0,
            cev_fraction: 0.1,
            count_threshold: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blobs: Option<BlobParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsParams>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn config_err(key: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        reason: reason.into(),
    }
}

/// Maps a domain validation error onto a config key under `section`.
fn in_section(section: &str, err: Error) -> Error {
    match err {
        Error::InvalidParameter { name, reason } => config_err(format!("{section}.{name}"), reason),
        other => config_err(section, other.to_string()),
    }
}

impl ExperimentConfig {
    /// Defaults for `command` with no file.
    pub fn new(command: Command) -> Self {
        let mut cfg = Self {
            command,
            seed: 0,
            output_dir: default_output_dir(),
            blobs: None,
            sweep: None,
            train: None,
            metrics: None,
        };
        cfg.resolve();
        cfg
    }

    fn uses(&self, section: &str) -> bool {
        matches!(
            (self.command, section),
            (Command::SweepFeatures | Command::SweepVariance, "blobs" | "sweep")
                | (Command::TrainToy, "blobs" | "train")
                | (Command::Metrics, "metrics")
        )
    }

    /// Fills every section the command uses with its defaults.
    fn resolve(&mut self) {
        let blob_defaults = match self.command {
            Command::TrainToy => match RunConfig::toy_replica(AlphaMode::Fixed { value: 1.0 }, 0).data {
                DataSource::Blobs(b) => b,
                DataSource::Csv(_) => unreachable!("replica uses blobs"),
            },
            _ => BlobConfig::default(),
        };
        if self.uses("blobs") {
            self.blobs.get_or_insert_with(Default::default).resolve(&blob_defaults);
        }
        if self.uses("sweep") {
            self.sweep.get_or_insert_with(Default::default);
        }
        if self.uses("train") {
            self.train.get_or_insert_with(Default::default);
        }
        if self.uses("metrics") {
            self.metrics.get_or_insert_with(Default::default);
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, present) in [
            ("blobs", self.blobs.is_some()),
            ("sweep", self.sweep.is_some()),
            ("train", self.train.is_some()),
            ("metrics", self.metrics.is_some()),
        ] {
            if present && !self.uses(name) {
                return Err(config_err(name, format!("section is not used by `{}`", self.command)));
            }
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(config_err("output_dir", "must not be empty"));
        }
        if let Some(b) = &self.blobs {
            b.to_config(self.seed).validate().map_err(|e| in_section("blobs", e))?;
        }
        if let Some(s) = &self.sweep {
            if s.pca_k < 1 {
                return Err(config_err("sweep.pca_k", "must be at least 1"));
            }
            if s.repeats < 1 {
                return Err(config_err("sweep.repeats", "must be at least 1"));
            }
            let n = self.blobs.as_ref().and_then(|b| b.n_samples).unwrap_or(0);
            if s.pca_k >= n {
                return Err(config_err("sweep.pca_k", format!("must be below blobs.n_samples ({n})")));
            }
            if self.command == Command::SweepFeatures {
                if s.feature_counts.is_empty() {
                    return Err(config_err("sweep.feature_counts", "must be nonempty"));
                }
                if let Some(&f) = s.feature_counts.iter().find(|&&f| f < s.pca_k) {
                    return Err(config_err("sweep.feature_counts", format!("{f} is below pca_k = {}", s.pca_k)));
                }
            }
            if self.command == Command::SweepVariance {
                if s.stds.is_empty() {
                    return Err(config_err("sweep.stds", "must be nonempty"));
                }
                if let Some(&v) = s.stds.iter().find(|&&v| !(v > 0.0) || !v.is_finite()) {
                    return Err(config_err("sweep.stds", format!("{v} is not a positive std")));
                }
                let f = self.blobs.as_ref().and_then(|b| b.n_features).unwrap_or(0);
                if s.pca_k > f {
                    return Err(config_err("sweep.pca_k", format!("exceeds blobs.n_features ({f})")));
                }
            }
        }
        if let Some(t) = &self.train {
            t.loss.validate().map_err(|e| in_section("train.loss", e))?;
            t.optimizer.validate().map_err(|e| in_section("train.optimizer", e))?;
            self.run_config()?.validate().map_err(|e| in_section("train", e))?;
            if t.input_csv.as_ref().is_some_and(|p| p.as_os_str().is_empty()) {
                return Err(config_err("train.input_csv", "must not be empty"));
            }
        }
        if let Some(m) = &self.metrics {
            if m.metrics.is_empty() {
                return Err(config_err("metrics.metrics", "must name at least one metric"));
            }
            if m.inputs.is_empty() {
                return Err(config_err("metrics.inputs", "need at least one input CSV"));
            }
            if m.metrics.contains(&MetricKind::Mi) && m.inputs.len() != 2 {
                return Err(config_err("metrics.inputs", "`mi` needs exactly two input CSVs"));
            }
            if !(m.renyi_alpha > 0.0) || m.renyi_alpha == 1.0 || !m.renyi_alpha.is_finite() {
                return Err(config_err("metrics.renyi_alpha", "must be positive and != 1"));
            }
            if !(m.cev_fraction > 0.0 && m.cev_fraction <= 1.0) {
                return Err(config_err("metrics.cev_fraction", "must lie in (0, 1]"));
            }
            if !(m.count_threshold >= 0.0) || !m.count_threshold.is_finite() {
                return Err(config_err("metrics.count_threshold", "must be finite and >= 0"));
            }
        }
        Ok(())
    }

    pub fn blob_config(&self) -> Option<BlobConfig> {
        self.blobs.as_ref().map(|b| b.to_config(self.seed))
    }

    /// Training configuration for `train-toy`.
    pub fn run_config(&self) -> Result<RunConfig> {
        let t = self
            .train
            .as_ref()
            .ok_or_else(|| config_err("train", format!("missing for `{}`", self.command)))?;
        let data = match &t.input_csv {
            Some(path) => DataSource::Csv(path.clone()),
            None => DataSource::Blobs(self.blob_config().unwrap_or_default()),
        };
        Ok(RunConfig {
            data,
            encoder_widths: t.encoder_widths.clone(),
            projector_widths: t.projector_widths.clone(),
            loss: t.loss,
            alpha: t.alpha.clone(),
            epochs: t.epochs,
            batch_size: t.batch_size,
            optimizer: t.optimizer,
            noise_sigma: t.noise_sigma,
            log_every: t.log_every,
            mi_alpha: t.mi_alpha,
            seed: self.seed,
        })
    }

    /// Fully resolved TOML; parsing it again yields an equal config.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err("<root>", e.to_string()))
    }
}

/// Parses, fills defaults and validates. Errors name the offending key,
/// e.g. `blobs.cluster_std`.
pub fn parse_config(source: &str) -> Result<ExperimentConfig> {
    let de = toml::Deserializer::parse(source).map_err(|e| config_err("<root>", e.to_string()))?;
    let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let key = if path == "." { "<root>".to_string() } else { path };
        config_err(key, e.into_inner().to_string())
    })?;
    cfg.resolve();
    cfg.validate()?;
    Ok(cfg)
}

/// Like [`parse_config`], for a file driven by a known subcommand: a missing
/// `command` key is filled in, a conflicting one is rejected.
pub fn parse_config_for(source: &str, command: Command) -> Result<ExperimentConfig> {
    let mut table: toml::Table = source.parse().map_err(|e: toml::de::Error| config_err("<root>", e.to_string()))?;
    match table.get("command") {
        None => {
            table.insert("command".into(), toml::Value::String(command.name().into()));
        }
        Some(toml::Value::String(s)) if s == command.name() => {}
        Some(other) => {
            return Err(config_err(
                "command",
                format!("config is for {other}, but `{command}` was requested"),
            ))
        }
    }
    parse_config(&toml::to_string(&table).map_err(|e| config_err("<root>", e.to_string()))?)
}
