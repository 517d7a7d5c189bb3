//! Step response of each subject's motor adaptation and its steady-state gain.
use nalgebra::DVector;
use synergy_es::model::subjects;

fn main() -> synergy_es::Result<()> {
    for cfg in [subjects::subject_a(), subjects::subject_b()] {
        let dynamics = cfg.dynamics()?;
        println!(
            "subject {}: gain {:.4}, spectral radius {:.3}",
            cfg.id.as_deref().unwrap_or("?"),
            dynamics.steady_state_gain()?,
            dynamics.spectral_radius()
        );
        let unit = dynamics.normalized()?;
        let mut x = DVector::zeros(unit.order());
        let mut line = String::new();
        for _ in 0..12 {
            let (next, y) = unit.step(&x, 1.0)?;
            line += &format!("{y:.3} ");
            x = next;
        }
        println!("  normalized step: {line}");
    }
    Ok(())
}
