//! The reaching simulator: performance across synergies and one hand path.
use synergy_es::plant::{simulate_reach, ArmGeometry, ReachTask, ShoulderProfile};

fn main() -> synergy_es::Result<()> {
    let geometry = ArmGeometry::default();
    let task = ReachTask::default();
    let profile = ShoulderProfile::for_task(&geometry, &task);
    for k in 0..=16 {
        let theta = 0.8 + 0.1 * k as f64;
        let out = simulate_reach(&geometry, &task, theta, &profile);
        println!(
            "theta {theta:.1}  error {:5.2} cm  time {:.2} s  J {:6.2}",
            out.end_error,
            out.completion_time,
            out.performance()
        );
    }
    let path = std::env::temp_dir().join("hand_path.csv");
    simulate_reach(&geometry, &task, 1.7, &profile).write_hand_path(std::fs::File::create(&path)?)?;
    println!("hand path at theta 1.7 written to {}", path.display());
    Ok(())
}
