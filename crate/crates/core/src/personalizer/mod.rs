//! Grey-box extremum seeking: band-pass the performance, track its
//! gradient and curvature tones with an observer, and step θ̂ with a switched
//! Newton / gradient law while a sinusoidal dither keeps the loop excited.

mod dither;
mod filter;
mod observer;
mod optimizer;

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

pub use dither::{DitherGenerator, DitherMode};
pub use filter::{design_bandpass, BandPassFilter};
pub use observer::{internal_model, Demodulator, Discretization, GradCurvObserver, Mat5, Vec5, DEFAULT_GAIN};
pub use optimizer::{Branch, OptimizerState};

use crate::error::{invalid, Error, Result};
use crate::model::SynergyBounds;
use crate::trace::TraceRow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PersonalizerConfig {
    /// Dither fundamental, rad/iteration.
    pub omega_o: f64,
    /// Dither amplitude.
    pub a: f64,
    pub k: f64,
    pub epsilon: f64,
    /// Band-pass gain at the centre frequency.
    #[serde(alias = "H")]
    pub h: f64,
    #[serde(alias = "Q")]
    pub q: f64,
    /// Highest dither harmonic the band-pass must pass.
    pub harmonics: usize,
    #[serde(alias = "L")]
    pub l: [f64; 5],
    pub theta_0: f64,
    pub bounds: SynergyBounds,
    pub warmup_iterations: usize,
    /// Performance full-scale. The loop works on `J / performance_scale`,
    /// which sets the size of gradient steps.
    pub performance_scale: f64,
    /// Nominal delay, in iterations, from a synergy change to its effect on
    /// performance. Sets the demodulation phase.
    pub plant_lag: f64,
    pub dither_mode: DitherMode,
    pub observer: Discretization,
}

impl Default for PersonalizerConfig {
    fn default() -> Self {
        Self {
            omega_o: FRAC_PI_4,
            a: 0.02,
            k: 0.05,
            epsilon: 0.1,
            h: 0.5,
            q: 5.0,
            harmonics: 2,
            l: DEFAULT_GAIN,
            theta_0: 1.0,
            bounds: SynergyBounds::default(),
            warmup_iterations: 8,
            performance_scale: 200.02,
            plant_lag: 2.0,
            dither_mode: DitherMode::Fundamental,
            observer: Discretization::PoleMatched,
        }
    }
}

impl PersonalizerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be positive and finite, got {v}")))
            }
        };
        positive(self.omega_o, "omega_o")?;
        positive(self.k, "k")?;
        positive(self.epsilon, "epsilon")?;
        positive(self.h, "h")?;
        positive(self.q, "q")?;
        positive(self.performance_scale, "performance_scale")?;
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return Err(invalid("a", "must be finite and >= 0"));
        }
        if !(self.plant_lag >= 0.0 && self.plant_lag.is_finite()) {
            return Err(invalid("plant_lag", "must be finite and >= 0"));
        }
        if self.harmonics < 2 {
            return Err(invalid("harmonics", "curvature needs the second harmonic"));
        }
        if self.l.iter().any(|v| !v.is_finite()) {
            return Err(invalid("l", "observer gain must be finite"));
        }
        self.bounds.validate("bounds")?;
        if !self.bounds.contains(self.theta_0) {
            return Err(invalid("theta_0", format!("{} lies outside the bounds", self.theta_0)));
        }
        Ok(())
    }
}

/// Filter, observer, optimizer and dither driven by one iteration counter.
#[derive(Debug, Clone)]
pub struct Personalizer {
    config: PersonalizerConfig,
    filter: BandPassFilter,
    observer: GradCurvObserver,
    optimizer: OptimizerState,
    dither: DitherGenerator,
    demod: Demodulator,
    iteration: usize,
    theta: f64,
}

impl Personalizer {
    pub fn new(config: PersonalizerConfig) -> Result<Self> {
        config.validate()?;
        let filter = design_bandpass(config.omega_o, config.harmonics, config.h, config.q)?;
        let observer = GradCurvObserver::with_discretization(config.omega_o, config.l, config.observer)?;
        // references line up with the dither as seen through plant and filter
        let mut demod = Demodulator::identity();
        for n in 0..2 {
            let w = (n + 1) as f64 * config.omega_o;
            let g = filter.response(w);
            demod.phase[n] = g.arg() - w * config.plant_lag;
            demod.gain[n] = g.norm();
        }
        let dither = DitherGenerator {
            amplitude: config.a,
            omega_o: config.omega_o,
            mode: config.dither_mode,
        };
        let optimizer = OptimizerState {
            theta_hat: config.theta_0,
            k: config.k,
            epsilon: config.epsilon,
            omega_o: config.omega_o,
            bounds: config.bounds,
            last_branch: None,
        };
        let theta = config.bounds.clamp(config.theta_0 + dither.applied(0));
        Ok(Self {
            config,
            filter,
            observer,
            optimizer,
            dither,
            demod,
            iteration: 0,
            theta,
        })
    }

    pub fn config(&self) -> &PersonalizerConfig {
        &self.config
    }

    pub fn filter(&self) -> &BandPassFilter {
        &self.filter
    }

    pub fn observer(&self) -> &GradCurvObserver {
        &self.observer
    }

    pub fn demodulator(&self) -> &Demodulator {
        &self.demod
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Synergy to apply for the current iteration.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn theta_hat(&self) -> f64 {
        self.optimizer.theta_hat
    }

    /// Holds θ̂ fixed: the loop keeps estimating but never moves.
    pub fn freeze(&mut self) {
        self.optimizer.k = 0.0;
    }

    /// Consumes the performance measured at the current θ and prepares the
    /// next one. During warm-up the filter is held at equilibrium with the
    /// incoming performance and θ̂ stays at θ_0.
    pub fn step(&mut self, performance: f64) -> Result<TraceRow> {
        let i = self.iteration;
        if !performance.is_finite() {
            return Err(Error::NonFinite { iteration: i, value: performance });
        }
        let scale = self.config.performance_scale;
        let y = performance / scale;
        let (theta_applied, theta_hat) = (self.theta, self.optimizer.theta_hat);

        let filtered = if i < self.config.warmup_iterations {
            self.filter.settle(y);
            self.filter.output()
        } else {
            let u_f = self.filter.step(y);
            self.observer.step(u_f);
            u_f
        };
        // the observer state now describes the filter output two samples on
        let (grad, curv) = self
            .demod
            .estimate(self.observer.state(), self.config.omega_o, i + 2, self.config.a);
        let branch = (i + 1 >= self.config.warmup_iterations).then(|| self.optimizer.step(grad, curv));

        self.iteration = i + 1;
        self.theta = self
            .config
            .bounds
            .clamp(self.optimizer.theta_hat + self.dither.applied(self.iteration));
        Ok(TraceRow {
            iteration: i,
            theta_applied,
            theta_hat,
            performance,
            filtered: Some(filtered * scale),
            grad_est: Some(grad * scale),
            curv_est: Some(curv * scale),
            branch,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{subjects, PreferenceMap};

    #[test]
    fn defaults_as_published() {
        let c = PersonalizerConfig::default();
        assert_eq!(c.omega_o, std::f64::consts::PI / 4.0);
        assert_eq!((c.a, c.k, c.epsilon, c.h, c.q), (0.02, 0.05, 0.1, 0.5, 5.0));
        assert_eq!(c.l, [1.5, 0.25, 0.25, 2.0, -2.0]);
        assert_eq!((c.theta_0, c.bounds.min, c.bounds.max, c.warmup_iterations), (1.0, 0.8, 2.4, 8));
    }

    #[test]
    fn warmup_holds_theta_hat() {
        let mut p = Personalizer::new(PersonalizerConfig::default()).unwrap();
        let dither = DitherGenerator {
            amplitude: 0.02,
            omega_o: FRAC_PI_4,
            mode: DitherMode::Fundamental,
        };
        let mut s = subjects::subject_a().noise_free().build().unwrap();
        for i in 0..8 {
            let row = p.step(s.step(p.theta())).unwrap();
            assert_eq!(row.theta_hat, 1.0);
            assert!((p.theta() - (1.0 + dither.applied(i + 1))).abs() < 1e-15);
        }
    }

    #[test]
    fn non_finite_rejected() {
        let mut p = Personalizer::new(PersonalizerConfig::default()).unwrap();
        assert!(matches!(p.step(f64::NAN), Err(Error::NonFinite { iteration: 0, .. })));
    }

    #[test]
    fn invalid_fields_named() {
        let c = PersonalizerConfig { theta_0: 3.0, ..Default::default() };
        match Personalizer::new(c) {
            Err(Error::InvalidConfig { field, .. }) => assert_eq!(field, "theta_0"),
            other => panic!("{other:?}"),
        }
    }

    fn static_run(iterations: usize) -> (Personalizer, PreferenceMap) {
        let map = PreferenceMap::quadratic([-158.15, 529.18, -293.34]);
        let cfg = PersonalizerConfig { plant_lag: 0.0, ..Default::default() };
        let mut p = Personalizer::new(cfg).unwrap();
        p.freeze();
        for _ in 0..iterations {
            let j = map.eval(p.theta());
            p.step(j).unwrap();
        }
        (p, map)
    }

    #[test]
    fn static_plant_estimates() {
        let (p, map) = static_run(64);
        let (g, c) = map.derivatives(p.theta_hat()).unwrap();
        let (ge, ce) = p.demodulator().estimate(p.observer().state(), FRAC_PI_4, 64 + 1, 0.02);
        let scale = p.config().performance_scale;
        assert!((ge * scale - g).abs() < 0.05 * g.abs(), "{} vs {g}", ge * scale);
        assert!((ce * scale - c).abs() < 0.15 * c.abs(), "{} vs {c}", ce * scale);
    }

    #[test]
    fn config_toml_round_trip() {
        let c = PersonalizerConfig { plant_lag: 1.5, dither_mode: DitherMode::Sum, ..Default::default() };
        let text = toml::to_string(&c).unwrap();
        assert_eq!(toml::from_str::<PersonalizerConfig>(&text).unwrap(), c);
        let partial: PersonalizerConfig = toml::from_str("k = 0.1\nQ = 4.0").unwrap();
        assert_eq!((partial.k, partial.q, partial.a), (0.1, 4.0, 0.02));
    }
}
