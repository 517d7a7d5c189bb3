use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use synergy_es::harness::{self, Algorithm, ExperimentConfig, SubjectSpec};
use synergy_es::sysid;

#[derive(Parser)]
#[command(version, about = "Grey-box extremum seeking for prosthesis synergy personalization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML); flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed, comma list or range such as 0..20
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    /// A, B, kinematic, or a subject TOML file
    #[arg(long)]
    subject: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// One closed-loop episode per seed
    Run(Common),
    /// Sweep the synergy from 0.8 to 2.4
    Sweep(Common),
    /// Monte Carlo batch with summary and plots
    Batch(Common),
    /// Fit a preference map and adaptation dynamics to a CSV
    Identify {
        /// CSV with theta and performance columns
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Alternations between map and dynamics fits
        #[arg(long, default_value_t = 3)]
        rounds: usize,
    },
    /// Differential report between two directories of traces
    Compare {
        first: PathBuf,
        second: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Subject whose optimum scores both sets
        #[arg(long)]
        subject: Option<String>,
    },
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = &c.seed {
        cfg.seeds = harness::parse_seeds(s)?;
    }
    if let Some(o) = &c.out {
        cfg.output_dir = o.clone();
    }
    if let Some(a) = c.algorithm {
        cfg.algorithm = a;
    }
    if let Some(s) = &c.subject {
        cfg.subject = SubjectSpec::resolve(s)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn save_config(cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join("config.toml"), cfg.to_toml())?;
    Ok(())
}

fn batch(cfg: ExperimentConfig) -> Result<()> {
    save_config(&cfg)?;
    let run = harness::run_batch(&cfg)?;
    let files = harness::write_batch(&run, &cfg.output_dir)?;
    print!("{}", run.report.text());
    println!("wrote {} files to {}", files.len(), cfg.output_dir.display());
    if let Some(e) = &run.report.error {
        bail!("batch incomplete: {e}");
    }
    Ok(())
}

fn identify(input: &Path, out: Option<PathBuf>, rounds: usize) -> Result<()> {
    let (theta, perf) = harness::read_theta_performance(input)?;
    let id = sysid::identify(&theta, &perf, rounds)?;
    let report = id.report();
    print!("{report}");
    if let Some(dir) = out {
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("identification.txt"), &report)?;
        fs::write(dir.join("subject.toml"), id.subject_config().to_toml())?;
        println!("wrote identification.txt and subject.toml to {}", dir.display());
    }
    Ok(())
}

fn compare(first: &Path, second: &Path, out: Option<PathBuf>, subject: Option<String>) -> Result<()> {
    let a = harness::load_traces(first)?;
    let b = harness::load_traces(second)?;
    if a.is_empty() || b.is_empty() {
        bail!("both directories need at least one trace CSV");
    }
    let id = subject.unwrap_or_else(|| a[0].meta.subject.clone());
    let theta_star = SubjectSpec::resolve(&id)
        .with_context(|| "pass --subject to say which optimum to score against")?
        .optimum()?;
    let criterion = harness::ConvergenceCriterion::default();
    let text = harness::compare(&a, &b, theta_star, &criterion).text();
    print!("{text}");
    if let Some(dir) = out {
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("compare.txt"), text)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(c) => load_config(&c).and_then(|cfg| {
            save_config(&cfg)?;
            for &seed in &cfg.seeds {
                let trace = harness::run_episode(&cfg, seed)?;
                let path = cfg.output_dir.join(format!("{}_{}_seed{seed}.csv", cfg.algorithm, trace.meta.subject));
                trace.save(&path)?;
                let last = trace.rows.last().expect("episode has rows");
                println!("seed {seed}: final theta_hat {:.4}, J {:.2} -> {}", last.theta_hat, last.performance, path.display());
            }
            Ok(())
        }),
        Command::Sweep(mut c) => {
            c.algorithm = Some(Algorithm::Sweep);
            load_config(&c).and_then(batch)
        }
        Command::Batch(c) => load_config(&c).and_then(batch),
        Command::Identify { input, out, rounds } => identify(&input, out, rounds),
        Command::Compare { first, second, out, subject } => compare(&first, &second, out, subject),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
