//! Evaluate both subjects' preference maps and locate their optima.
use synergy_es::model::subjects;

fn main() -> synergy_es::Result<()> {
    for cfg in [subjects::subject_a(), subjects::subject_b()] {
        let map = cfg.map();
        let star = map.optimal_synergy()?;
        println!("subject {}: theta* = {star:.4}, peak J = {:.2}", cfg.id.as_deref().unwrap_or("?"), map.peak_performance()?);
        for k in 0..=8 {
            let t = 0.8 + 0.2 * k as f64;
            let (d1, d2) = map.derivatives(t)?;
            println!("  theta {t:.1}  J {:7.2}  dJ {:8.2}  d2J {:8.2}", map.eval(t), d1, d2);
        }
    }
    Ok(())
}
