//! Grey-box extremum seeking on a subject, printing the loop's internal estimates.
//!
//! cargo run --example personalize_subject -- B
use synergy_es::model::subjects;
use synergy_es::personalizer::{Personalizer, PersonalizerConfig};

fn main() -> synergy_es::Result<()> {
    let id = std::env::args().nth(1).unwrap_or_else(|| "A".into());
    let cfg = subjects::by_id(&id).expect("subject A or B");
    let star = cfg.map().optimal_synergy()?;
    let mut subject = cfg.noise_free().build()?;
    let mut es = Personalizer::new(PersonalizerConfig::default())?;
    println!("iter  theta_hat  J        grad      curv      branch");
    for _ in 0..150 {
        let row = es.step(subject.step(es.theta()))?;
        if row.iteration % 10 == 0 {
            println!(
                "{:4}  {:.4}     {:7.2}  {:8.2}  {:8.2}  {}",
                row.iteration,
                row.theta_hat,
                row.performance,
                row.grad_est.unwrap_or(0.0),
                row.curv_est.unwrap_or(0.0),
                row.branch.map(|b| b.to_string()).unwrap_or_default()
            );
        }
    }
    println!("final {:.4}, optimum {star:.4}", es.theta_hat());
    Ok(())
}
