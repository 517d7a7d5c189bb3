use nalgebra::DVector;
use proptest::prelude::*;
use synergy_es::model::{AdaptationDynamics, MotorNoise, PreferenceMap, SimulatedSubject};

fn stable_dynamics() -> impl Strategy<Value = AdaptationDynamics> {
    (-0.9..0.9f64, -0.9..0.9f64, -2.0..2.0f64, 0.1..2.0f64).prop_map(|(p1, p2, m1, m2)| {
        AdaptationDynamics::companion(&[-(p1 + p2), p1 * p2], &[m1, m2]).unwrap()
    })
}

fn concave_map() -> impl Strategy<Value = PreferenceMap> {
    (-500.0..-1.0f64, -1000.0..1000.0f64, -500.0..500.0f64).prop_map(|(l1, l2, l3)| PreferenceMap::quadratic([l1, l2, l3]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn normalized_gain_is_one(d in stable_dynamics()) {
        prop_assume!(d.steady_state_gain().unwrap().abs() > 1e-3);
        let g = d.normalized().unwrap().steady_state_gain().unwrap();
        prop_assert!((g - 1.0).abs() < 1e-12, "{}", g);
    }

    #[test]
    fn step_response_decays_geometrically(d in stable_dynamics(), u in -5.0..5.0f64) {
        prop_assume!(d.steady_state_gain().unwrap().abs() > 1e-3);
        let d = d.normalized().unwrap();
        let rho = d.spectral_radius() + 0.05;
        let mut x = DVector::zeros(2);
        let mut err = Vec::new();
        for _ in 0..200 {
            let (next, y) = d.step(&x, u).unwrap();
            err.push((y - u).abs());
            x = next;
        }
        let c = (0..20).map(|i| err[i] / rho.powi(i as i32)).fold(0.0, f64::max);
        for (i, e) in err.iter().enumerate().skip(20) {
            prop_assert!(*e <= 2.0 * c * rho.powi(i as i32) + 1e-12, "i {} err {}", i, e);
        }
        prop_assert!(err[199] < 1e-6);
    }

    #[test]
    fn derivatives_match_central_differences(m in concave_map(), t in 0.8..2.4f64) {
        let h = 1e-6;
        let (d1, d2) = m.derivatives(t).unwrap();
        let fd1 = (m.eval(t + h) - m.eval(t - h)) / (2.0 * h);
        prop_assert!((d1 - fd1).abs() <= 1e-6 * d1.abs().max(1.0), "{} vs {}", d1, fd1);
        let hh = 1e-3;
        let fd2 = (m.eval(t + hh) - 2.0 * m.eval(t) + m.eval(t - hh)) / (hh * hh);
        prop_assert!((d2 - fd2).abs() <= 1e-6 * d2.abs(), "{} vs {}", d2, fd2);
    }

    #[test]
    fn argmax_ignores_positive_scaling(m in concave_map(), c in 1e-3..1e3f64) {
        let scaled = PreferenceMap::quadratic([m.lambda[0] * c, m.lambda[1] * c, m.lambda[2] * c]);
        let a = m.optimal_synergy().unwrap();
        let b = scaled.optimal_synergy().unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn equal_seeds_equal_streams(seed in any::<u64>(), thetas in prop::collection::vec(0.8..2.4f64, 1..60)) {
        let make = || {
            SimulatedSubject::new(
                PreferenceMap::quadratic([-158.15, 529.18, -293.34]),
                AdaptationDynamics::from_rows(&[vec![0.0, 1.0], vec![0.068, 0.35]], &[0.839, 0.037], &[1.0, 0.0]).unwrap(),
                MotorNoise { mean: 0.0, std_dev: 16.81, seed },
            )
            .unwrap()
        };
        let (mut a, mut b) = (make(), make());
        for &t in &thetas {
            prop_assert_eq!(a.step(t).to_bits(), b.step(t).to_bits());
        }
    }
}
