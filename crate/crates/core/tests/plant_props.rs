use proptest::prelude::*;
use synergy_es::plant::{objective, simulate_reach, ArmGeometry, ReachTask, ShoulderProfile};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn objective_never_rewards_worse_outcomes(
        e1 in 0.0..20.0f64, e2 in 0.0..20.0f64, t1 in 0.05..5.0f64, t2 in 0.05..5.0f64,
    ) {
        let (lo_e, hi_e) = (e1.min(e2), e1.max(e2));
        let (lo_t, hi_t) = (t1.min(t2), t1.max(t2));
        prop_assert!(objective(hi_e, lo_t) <= objective(lo_e, lo_t));
        prop_assert!(objective(lo_e, hi_t) <= objective(lo_e, lo_t));
        let j = objective(e1, t1);
        prop_assert!(j > 0.0 && j <= 200.02 + 1e-9, "{}", j);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn reach_is_deterministic(theta in 0.0..3.0f64, upper in 25.0..35.0f64, forearm in 28.0..40.0f64) {
        let g = ArmGeometry::new(upper, forearm, [0.0, 0.0]).unwrap();
        let task = ReachTask::default();
        let p = ShoulderProfile::for_task(&g, &task);
        let a = simulate_reach(&g, &task, theta, &p);
        let b = simulate_reach(&g, &task, theta, &p);
        prop_assert_eq!(a.end_error.to_bits(), b.end_error.to_bits());
        prop_assert_eq!(a.completion_time.to_bits(), b.completion_time.to_bits());
        prop_assert_eq!(a.hand_path, b.hand_path);
    }
}

#[test]
fn single_peak_over_synergy_range() {
    let (g, task) = (ArmGeometry::default(), ReachTask::default());
    let p = ShoulderProfile::for_task(&g, &task);
    let j: Vec<f64> = (0..=320)
        .map(|k| simulate_reach(&g, &task, 0.8 + k as f64 * 0.005, &p).performance())
        .collect();
    let peak = j.iter().cloned().fold(f64::MIN, f64::max);
    let first = j.iter().position(|&v| v == peak).unwrap();
    let last = j.iter().rposition(|&v| v == peak).unwrap();
    assert!(j[first..=last].iter().all(|&v| v == peak), "peak is not one plateau");
    let tol = 1e-9;
    assert!(j[..=first].windows(2).all(|w| w[1] >= w[0] - tol), "not rising to the peak");
    assert!(j[last..].windows(2).all(|w| w[1] <= w[0] + tol), "not falling after the peak");
}
