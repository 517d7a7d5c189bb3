//! Grey-box extremum seeking driving the reaching simulator instead of a fitted model.
use synergy_es::harness::{run_episode, ExperimentConfig, KinematicConfig, SubjectSpec};

fn main() -> synergy_es::Result<()> {
    let mut config = ExperimentConfig {
        subject: SubjectSpec::Kinematic(KinematicConfig::default()),
        iterations: 200,
        ..Default::default()
    };
    // away from the target the objective saturates and gives no slope,
    // so start where the end error already responds to the synergy
    config.personalizer.theta_0 = 1.5;
    // the simulator responds within the same iteration
    config.personalizer.plant_lag = 0.0;
    // the peak is a narrow cusp, much steeper than the fitted quadratics
    config.personalizer.k = 0.01;
    let star = config.subject.optimum()?;
    let trace = run_episode(&config, 0)?;
    for r in trace.rows.iter().step_by(20) {
        println!("iter {:3}  theta_hat {:.3}  J {:6.2}", r.iteration, r.theta_hat, r.performance);
    }
    println!("geometric optimum {star:.3}");
    Ok(())
}
