//! Record a sweep from subject B, then recover its map and dynamics from the data.
use synergy_es::harness::{run_sweep, ExperimentConfig, SubjectSpec};
use synergy_es::model::subjects;
use synergy_es::sysid;

fn main() -> synergy_es::Result<()> {
    let config = ExperimentConfig {
        subject: SubjectSpec::Greybox(subjects::subject_b()),
        ..Default::default()
    };
    let trace = run_sweep(&config, 3)?;
    let theta: Vec<f64> = trace.rows.iter().map(|r| r.theta_applied).collect();
    let id = sysid::identify(&theta, &trace.performance(), 3)?;
    print!("{}", id.report());
    println!("\ntrue lambda = {:?}", subjects::subject_b().lambda);
    println!("\n# fitted subject, loadable with --subject\n{}", id.subject_config().to_toml());
    Ok(())
}
