use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use repdyn::cli::{parse_config_for, run_experiment, Command, ExperimentConfig, MetricKind};
use repdyn::{Error, Result};

#[derive(Parser)]
#[command(name = "repdyn", version, about = "Representation-dynamics experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Gaussian MI of PCA projections as the feature count grows.
    SweepFeatures(Common),
    /// Gaussian MI of PCA projections as the cluster std grows.
    SweepVariance(Common),
    /// Train the toy encoder/projector and log its trajectory.
    TrainToy(Common),
    /// Spectrum and information metrics of CSV feature matrices.
    Metrics {
        #[command(flatten)]
        common: Common,
        /// Input CSV; repeat for `mi`.
        #[arg(long = "input")]
        inputs: Vec<PathBuf>,
        /// Comma list from er,vne,renyi,mi,cev,count,uniformity.
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<String>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(command: Command, common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            parse_config_for(&text, command)?
        }
        None => ExperimentConfig::new(command),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match cli.command {
        Sub::SweepFeatures(c) => load(Command::SweepFeatures, &c)?,
        Sub::SweepVariance(c) => load(Command::SweepVariance, &c)?,
        Sub::TrainToy(c) => load(Command::TrainToy, &c)?,
        Sub::Metrics { common, inputs, metrics } => {
            let mut cfg = load(Command::Metrics, &common)?;
            let m = cfg.metrics.as_mut().expect("resolved");
            if !inputs.is_empty() {
                m.inputs = inputs;
            }
            if !metrics.is_empty() {
                m.metrics = metrics.iter().map(|s| s.parse::<MetricKind>()).collect::<Result<_>>()?;
            }
            cfg
        }
    };
    let manifest = run_experiment(&cfg)?;
    for a in &manifest.artifacts {
        println!("{}  {}", a.sha256, cfg.output_dir.join(&a.file).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
