//! A 20-seed batch with CSV traces, summary and SVG plots written to a directory.
//!
//! cargo run --example monte_carlo_batch -- /tmp/batch
use std::path::PathBuf;
use synergy_es::harness::{run_batch, write_batch, ExperimentConfig};

fn main() -> synergy_es::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("synergy-batch"));
    let config = ExperimentConfig {
        seeds: (0..20).collect(),
        ..Default::default()
    };
    let run = run_batch(&config)?;
    let files = write_batch(&run, &dir)?;
    print!("{}", run.report.text());
    println!("{} files in {}", files.len(), dir.display());
    Ok(())
}
