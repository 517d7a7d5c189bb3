//! Grey-box against black-box extremum seeking on subject B over 20 seeds.
use synergy_es::harness::{compare, run_batch, Algorithm, ExperimentConfig, SubjectSpec};
use synergy_es::model::subjects;

fn main() -> synergy_es::Result<()> {
    let base = ExperimentConfig {
        subject: SubjectSpec::Greybox(subjects::subject_b()),
        seeds: (0..20).collect(),
        ..Default::default()
    };
    let grey = run_batch(&base)?;
    let black = run_batch(&ExperimentConfig {
        algorithm: Algorithm::Blackbox,
        ..base.clone()
    })?;
    let star = base.subject.optimum()?;
    print!("{}", compare(&grey.traces, &black.traces, star, &base.convergence).text());
    Ok(())
}
