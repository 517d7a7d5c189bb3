use nalgebra::{Complex, DMatrix, RowSVector, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::spectral_radius;

pub type Mat5 = SMatrix<f64, 5, 5>;
pub type Vec5 = SVector<f64, 5>;

/// Internal model of the filtered performance: an offset, a unit-rate
/// oscillator carrying the gradient and a double-rate oscillator carrying the
/// curvature, time-scaled by `ω_o`.
pub fn internal_model() -> (Mat5, RowSVector<f64, 5>) {
    #[rustfmt::skip]
    let phi = Mat5::from_row_slice(&[
        0.0,  0.0, 0.0,  0.0, 0.0,
        0.0,  0.0, 1.0,  0.0, 0.0,
        0.0, -1.0, 0.0,  0.0, 0.0,
        0.0,  0.0, 0.0,  0.0, 2.0,
        0.0,  0.0, 0.0, -2.0, 0.0,
    ]);
    let psi = RowSVector::<f64, 5>::from_row_slice(&[1.0, 1.0, 0.0, 0.0, -0.25]);
    (phi, psi)
}

pub const DEFAULT_GAIN: [f64; 5] = [1.5, 0.25, 0.25, 2.0, -2.0];

/// How the continuous observer `ż = Φ_o z + L(u − Ψ_o z)`, time-scaled by
/// `ω_o`, becomes a once-per-iteration update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Discretization {
    /// Error-dynamics poles placed at `e^{ω_o λ}` for each continuous
    /// eigenvalue `λ` of `Φ_o − LΨ_o`.
    #[default]
    PoleMatched,
    /// Innovation held constant over the step.
    ZeroOrderHold,
}

/// Luenberger observer for the internal model, sampled once per iteration.
///
/// The continuous error dynamics `ω_o(Φ_o − LΨ_o)` are stable for the
/// default gain, and the observer is their exact zero-order-hold
/// discretization: `ẑ' = e^{ω_o Φ_o} ẑ + K(u − Ψ_o ẑ)`, with `K` the
/// integral of `e^{ω_o (Φ_o − LΨ_o) s}·ω_o L` over one step.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCurvObserver {
    z: Vec5,
    gain: Vec5,
    omega_o: f64,
    transition: Mat5,
    injection: Vec5,
    psi: RowSVector<f64, 5>,
    closed_loop: Mat5,
}

impl GradCurvObserver {
    pub fn new(omega_o: f64, gain: [f64; 5]) -> Result<Self> {
        Self::with_discretization(omega_o, gain, Discretization::default())
    }

    pub fn with_discretization(omega_o: f64, gain: [f64; 5], method: Discretization) -> Result<Self> {
        let (phi, psi) = internal_model();
        let l = Vec5::from_column_slice(&gain);
        let m = phi - l * psi;
        let transition = (phi * omega_o).exp();
        let singular = || crate::error::invalid("L", "observer error dynamics are singular");
        let injection = match method {
            Discretization::ZeroOrderHold => {
                let growth = (m * omega_o).exp() - Mat5::identity();
                m.lu().solve(&(growth * l)).ok_or_else(singular)?
            }
            Discretization::PoleMatched => {
                let continuous = DMatrix::from_iterator(5, 5, m.iter().copied()).complex_eigenvalues();
                if continuous.iter().any(|z| z.re >= 0.0) {
                    let radius = continuous.iter().map(|z| (z.re * omega_o).exp()).fold(0.0, f64::max);
                    return Err(Error::Unstable { what: "observer", radius });
                }
                let poles: Vec<Complex<f64>> = continuous.iter().map(|z| (z * omega_o).exp()).collect();
                ackermann(&transition, &psi, &poles).ok_or_else(singular)?
            }
        };
        let closed_loop = transition - injection * psi;
        let radius = spectral_radius(&DMatrix::from_iterator(5, 5, closed_loop.iter().copied()));
        if !(radius < 1.0) {
            return Err(Error::Unstable { what: "observer", radius });
        }
        Ok(Self {
            z: Vec5::zeros(),
            gain: l,
            omega_o,
            transition,
            injection,
            psi,
            closed_loop,
        })
    }

    pub fn state(&self) -> &Vec5 {
        &self.z
    }

    pub fn gain(&self) -> &Vec5 {
        &self.gain
    }

    pub fn omega_o(&self) -> f64 {
        self.omega_o
    }

    pub fn injection(&self) -> &Vec5 {
        &self.injection
    }

    pub fn transition(&self) -> &Mat5 {
        &self.transition
    }

    /// Spectral radius of the estimation-error iteration matrix.
    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&DMatrix::from_iterator(5, 5, self.closed_loop.iter().copied()))
    }

    pub fn predicted_output(&self) -> f64 {
        (self.psi * self.z)[0]
    }

    pub fn step(&mut self, u_f: f64) {
        let innovation = u_f - self.predicted_output();
        self.z = self.transition * self.z + self.injection * innovation;
    }

    pub fn reset(&mut self) {
        self.z = Vec5::zeros();
    }

    /// Plain demodulation at index `i`: `(Ψ′ẑ/a, Ψ″ẑ/a²)`.
    pub fn estimate(&self, i: usize, a: f64) -> (f64, f64) {
        Demodulator::identity().estimate(&self.z, self.omega_o, i, a)
    }
}

/// Observer gain placing the eigenvalues of `A − KC` at `poles`.
fn ackermann(a: &Mat5, c: &RowSVector<f64, 5>, poles: &[Complex<f64>]) -> Option<Vec5> {
    // characteristic polynomial Π(z − p), real up to rounding
    let mut coeffs = vec![Complex::new(1.0, 0.0)];
    for p in poles {
        let mut next = vec![Complex::new(0.0, 0.0); coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * p;
        }
        coeffs = next;
    }
    let mut phi_a = Mat5::zeros();
    for c in &coeffs {
        phi_a = phi_a * a + Mat5::identity() * c.re;
    }
    let mut obs = Mat5::zeros();
    let mut row = *c;
    for r in 0..5 {
        obs.set_row(r, &row);
        row *= a;
    }
    let mut e = Vec5::zeros();
    e[4] = 1.0;
    let x = obs.lu().solve(&e)?;
    Some(phi_a * x)
}

/// Demodulation references with per-harmonic phase offset and gain, used to
/// undo the known response between the dither and the observer input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Demodulator {
    pub phase: [f64; 2],
    pub gain: [f64; 2],
}

impl Demodulator {
    pub fn identity() -> Self {
        Self { phase: [0.0; 2], gain: [1.0; 2] }
    }

    pub fn estimate(&self, z: &Vec5, omega_o: f64, i: usize, a: f64) -> (f64, f64) {
        if a == 0.0 {
            // no excitation, nothing to demodulate
            return (0.0, 0.0);
        }
        let p = omega_o * i as f64;
        let (s1, c1) = (p + self.phase[0]).sin_cos();
        let (s2, c2) = (2.0 * p + self.phase[1]).sin_cos();
        let grad = (s1 * z[1] + c1 * z[2]) / (a * self.gain[0]);
        let curv = (s2 * z[3] + c2 * z[4]) / (a * a * self.gain[1]);
        (grad, curv)
    }
}
