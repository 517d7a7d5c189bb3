use serde::{Deserialize, Serialize};

/// How the dither vector `[a·sin(ωi), a·sin(2ωi)]` reaches the scalar synergy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DitherMode {
    /// Only the fundamental. Curvature is read from the second harmonic the
    /// concave map itself generates, which the observer output model expects.
    #[default]
    Fundamental,
    /// Both components added.
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DitherGenerator {
    pub amplitude: f64,
    pub omega_o: f64,
    pub mode: DitherMode,
}

impl DitherGenerator {
    pub fn components(&self, i: usize) -> [f64; 2] {
        let p = self.omega_o * i as f64;
        [self.amplitude * p.sin(), self.amplitude * (2.0 * p).sin()]
    }

    /// Sum of both components.
    pub fn dither(&self, i: usize) -> f64 {
        let [d1, d2] = self.components(i);
        d1 + d2
    }

    /// Perturbation actually added to θ̂ at iteration `i`.
    pub fn applied(&self, i: usize) -> f64 {
        match self.mode {
            DitherMode::Fundamental => self.components(i)[0],
            DitherMode::Sum => self.dither(i),
        }
    }
}
