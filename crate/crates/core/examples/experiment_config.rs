//! Config-driven experiments: parse a TOML config, run it, and read the
//! manifest. The `repdyn` binary does the same from the command line.

use repdyn::cli::{parse_config, run_experiment, METRICS_FILE};
use repdyn::{FeatureMatrix, Result};

pub fn run_example() -> Result<()> {
    let dir = std::env::temp_dir().join(format!("repdyn-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| repdyn::Error::Io { path: dir.clone(), source: e })?;
    // Zero-mean orthonormal columns: every centered singular value is 1.
    let input = dir.join("orthonormal.csv");
    FeatureMatrix::from_row_slice(4, 3, &[0.5, 0.5, 0.5, -0.5, 0.5, -0.5, 0.5, -0.5, -0.5, -0.5, -0.5, 0.5])?
        .write_csv(&input)?;

    let source = format!(
        "command = \"metrics\"\noutput_dir = {:?}\n\n[metrics]\ninputs = [{:?}]\nmetrics = [\"er\", \"vne\", \"count\"]\n",
        dir.join("out"),
        input
    );
    let cfg = parse_config(&source)?;
    println!("resolved config:\n{}", cfg.to_toml()?);
    let manifest = run_experiment(&cfg)?;
    for a in &manifest.artifacts {
        println!("{} {} bytes sha256 {}", a.file, a.bytes, a.sha256);
    }
    let csv = std::fs::read_to_string(cfg.output_dir.join(METRICS_FILE)).expect("written above");
    print!("{csv}");
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
