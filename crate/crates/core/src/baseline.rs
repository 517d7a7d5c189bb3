//! Classic single-parameter perturbation extremum seeking: high-pass the
//! performance, demodulate with the dither, integrate.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::SynergyBounds;
use crate::trace::TraceRow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub k: f64,
    pub a: f64,
    pub omega_o: f64,
    /// High-pass cutoff as a fraction of `omega_o`.
    pub cutoff_ratio: f64,
    pub theta_0: f64,
    pub bounds: SynergyBounds,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            k: 0.005,
            a: 0.02,
            omega_o: FRAC_PI_4,
            cutoff_ratio: 0.2,
            theta_0: 1.0,
            bounds: SynergyBounds::default(),
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        for (v, name) in [(self.k, "k"), (self.omega_o, "omega_o"), (self.cutoff_ratio, "cutoff_ratio")] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return Err(invalid("a", "must be finite and >= 0"));
        }
        self.bounds.validate("bounds")?;
        if !self.bounds.contains(self.theta_0) {
            return Err(invalid("theta_0", "outside the bounds"));
        }
        Ok(())
    }
}

/// First-order high-pass `y_i = α(y_{i−1} + x_i − x_{i−1})`, started at
/// rest on its first input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighPass {
    alpha: f64,
    last_in: Option<f64>,
    last_out: f64,
}

impl HighPass {
    pub fn new(cutoff: f64) -> Self {
        Self {
            alpha: 1.0 / (1.0 + cutoff),
            last_in: None,
            last_out: 0.0,
        }
    }

    pub fn step(&mut self, x: f64) -> f64 {
        let prev = self.last_in.unwrap_or(x);
        self.last_out = self.alpha * (self.last_out + x - prev);
        self.last_in = Some(x);
        self.last_out
    }
}

#[derive(Debug, Clone)]
pub struct BlackBoxEs {
    config: BaselineConfig,
    highpass: HighPass,
    theta_hat: f64,
    theta: f64,
    iteration: usize,
}

impl BlackBoxEs {
    pub fn new(config: BaselineConfig) -> Result<Self> {
        config.validate()?;
        let theta_hat = config.theta_0;
        Ok(Self {
            highpass: HighPass::new(config.cutoff_ratio * config.omega_o),
            theta: config.bounds.clamp(theta_hat),
            theta_hat,
            iteration: 0,
            config,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn theta_hat(&self) -> f64 {
        self.theta_hat
    }

    pub fn step(&mut self, performance: f64) -> Result<TraceRow> {
        let i = self.iteration;
        if !performance.is_finite() {
            return Err(Error::NonFinite { iteration: i, value: performance });
        }
        let c = &self.config;
        let row = TraceRow::plain(i, self.theta, self.theta_hat, performance);
        let hp = self.highpass.step(performance);
        let xi = (c.omega_o * i as f64).sin() * hp;
        self.theta_hat = c.bounds.clamp(self.theta_hat + c.k * xi);
        self.iteration = i + 1;
        self.theta = c
            .bounds
            .clamp(self.theta_hat + c.a * (c.omega_o * self.iteration as f64).sin());
        Ok(TraceRow {
            filtered: Some(hp),
            ..row
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{subjects, PreferenceMap};

    #[test]
    fn constant_stream_does_not_drift() {
        let mut es = BlackBoxEs::new(BaselineConfig::default()).unwrap();
        let hats: Vec<f64> = (0..=200).map(|_| es.step(120.0).unwrap().theta_hat).collect();
        assert!((hats[200] - hats[50]).abs() <= 1e-3);
    }

    #[test]
    fn finds_static_optimum() {
        let map = PreferenceMap::quadratic([-158.15, 529.18, -293.34]);
        let mut es = BlackBoxEs::new(BaselineConfig::default()).unwrap();
        for _ in 0..500 {
            es.step(map.eval(es.theta())).unwrap();
        }
        assert!((es.theta_hat() - subjects::THETA_STAR_A).abs() < 0.1, "{}", es.theta_hat());
    }

    #[test]
    fn output_clamped_and_nan_rejected() {
        let mut es = BlackBoxEs::new(BaselineConfig { k: 10.0, ..Default::default() }).unwrap();
        for i in 0..100 {
            let r = es.step(if i % 2 == 0 { 1e4 } else { -1e4 }).unwrap();
            assert!(SynergyBounds::default().contains(r.theta_applied));
        }
        assert!(es.step(f64::INFINITY).is_err());
    }

    #[test]
    fn highpass_starts_at_rest() {
        let mut hp = HighPass::new(0.1);
        assert_eq!(hp.step(50.0), 0.0);
        assert!(hp.step(51.0) > 0.0);
    }
}
