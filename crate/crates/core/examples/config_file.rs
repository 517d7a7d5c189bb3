//! Build an experiment from TOML, print its hash, and show a validation error.
use synergy_es::harness::ExperimentConfig;

const TEXT: &str = r#"
algorithm = "blackbox"
iterations = 120
seeds = [1, 2, 3]

[subject]
kind = "greybox"
id = "B"
lambda = [-96.18, 342.13, -147.86]
phi = [[0.0, 1.0], [-0.017, 0.25]]
gamma = [-0.091, 0.834]
psi = [1.0, 0.0]
noise_std = 22.36

[baseline]
k = 0.005
"#;

fn main() -> synergy_es::Result<()> {
    let config = ExperimentConfig::from_toml(TEXT)?;
    config.validate()?;
    println!("hash {}", config.hash());
    println!("{}", config.to_toml());
    let broken = ExperimentConfig::from_toml("iterations = 4")?;
    println!("short run: {}", broken.validate().unwrap_err());
    Ok(())
}
