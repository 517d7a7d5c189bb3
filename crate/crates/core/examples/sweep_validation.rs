//! Synergy sweep on subject A: noise-free response against a 20-seed average.
use synergy_es::harness::{run_sweep, ExperimentConfig, SubjectSpec};
use synergy_es::model::subjects;

fn main() -> synergy_es::Result<()> {
    let noisy = ExperimentConfig {
        subject: SubjectSpec::Greybox(subjects::subject_a()),
        ..Default::default()
    };
    let clean = ExperimentConfig {
        subject: noisy.subject.noise_free(),
        ..noisy.clone()
    };
    let reference = run_sweep(&clean, 0)?.performance();
    let runs: Vec<Vec<f64>> = (0..20)
        .map(|s| run_sweep(&noisy, s).map(|t| t.performance()))
        .collect::<Result<_, _>>()?;
    let (peak, _) = reference
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |b, (i, &j)| if j > b.1 { (i, j) } else { b });
    println!("noise-free peak at iteration {peak} (theta {:.3})", clean.sweep.theta(peak));
    for i in (0..reference.len()).step_by(20) {
        let mean = runs.iter().map(|r| r[i]).sum::<f64>() / runs.len() as f64;
        println!("theta {:.2}  clean {:7.2}  mean of 20 {:7.2}", clean.sweep.theta(i), reference[i], mean);
    }
    Ok(())
}
