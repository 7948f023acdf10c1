//! Runs an experiment config and prints its JSON report.
//!
//! cargo run --example run_config -- crates/core/examples/configs/tv_table.json

use std::path::PathBuf;

use kolcouple::{run_experiment, ExperimentConfig};

fn main() -> kolcouple::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/tv_table.json")));
    let config = ExperimentConfig::load(&path)?;
    let report = run_experiment(&config, None)?;
    println!("{}", report.to_json_pretty());
    Ok(())
}
