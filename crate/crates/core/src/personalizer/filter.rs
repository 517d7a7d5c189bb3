use std::f64::consts::PI;

use nalgebra::{Complex, Matrix2, RowVector2, Vector2};

use crate::error::{invalid, Result};

/// Second-order band-pass centred between the dither fundamental and its
/// highest harmonic, in strictly proper state-space form
/// `w' = Φ_f w + Γ_f J`, `u_f = Ψ_f w`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandPassFilter {
    phi: Matrix2<f64>,
    gamma: Vector2<f64>,
    psi: RowVector2<f64>,
    w: Vector2<f64>,
    pub omega_o: f64,
    pub harmonics: usize,
    pub gain: f64,
    pub quality: f64,
    // denominator z² + d1·z + d2 and numerator c·(z − 1)
    d1: f64,
    d2: f64,
    c: f64,
}

/// Poles come from the bilinear map of `s² + (Ω/Q)s + Ω²`, with Ω prewarped
/// so the centre frequency lands exactly on `ω_c = √n·ω_o`. The numerator
/// keeps the zero at DC and trades the Nyquist zero for a unit delay, which
/// makes the realization strictly proper. Its gain is set to `H` at `ω_c`.
pub fn design_bandpass(omega_o: f64, n: usize, gain: f64, quality: f64) -> Result<BandPassFilter> {
    if !(omega_o > 0.0 && omega_o.is_finite()) {
        return Err(invalid("omega_o", "must be positive"));
    }
    if n == 0 || n as f64 * omega_o >= PI {
        return Err(invalid("omega_o", format!("harmonic {n}·ω_o must stay below π (aliasing)")));
    }
    if !(gain > 0.0 && gain.is_finite()) {
        return Err(invalid("H", "must be positive"));
    }
    if !(quality > 0.0 && quality.is_finite()) {
        return Err(invalid("Q", "must be positive"));
    }
    let wc = (n as f64).sqrt() * omega_o;
    let big_w = 2.0 * (wc / 2.0).tan();
    let bw = big_w / quality;
    let a0 = 4.0 + 2.0 * bw + big_w * big_w;
    let d1 = (2.0 * big_w * big_w - 8.0) / a0;
    let d2 = (4.0 - 2.0 * bw + big_w * big_w) / a0;
    let z = Complex::from_polar(1.0, wc);
    let c = gain * (z * z + z * d1 + d2).norm() / (z - 1.0).norm();
    Ok(BandPassFilter {
        phi: Matrix2::new(0.0, 1.0, -d2, -d1),
        gamma: Vector2::new(c, -c * (1.0 + d1)),
        psi: RowVector2::new(1.0, 0.0),
        w: Vector2::zeros(),
        omega_o,
        harmonics: n,
        gain,
        quality,
        d1,
        d2,
        c,
    })
}

impl BandPassFilter {
    pub fn centre_frequency(&self) -> f64 {
        (self.harmonics as f64).sqrt() * self.omega_o
    }

    pub fn phi(&self) -> &Matrix2<f64> {
        &self.phi
    }

    pub fn gamma(&self) -> &Vector2<f64> {
        &self.gamma
    }

    pub fn psi(&self) -> &RowVector2<f64> {
        &self.psi
    }

    pub fn state(&self) -> &Vector2<f64> {
        &self.w
    }

    /// Pole radius; the poles are a complex pair for any practical Q.
    pub fn spectral_radius(&self) -> f64 {
        let disc = self.d1 * self.d1 - 4.0 * self.d2;
        if disc < 0.0 {
            self.d2.sqrt()
        } else {
            let r = disc.sqrt();
            ((-self.d1 + r) / 2.0).abs().max(((-self.d1 - r) / 2.0).abs())
        }
    }

    /// `Ψ_f (e^{jω} I − Φ_f)⁻¹ Γ_f`
    pub fn response(&self, omega: f64) -> Complex<f64> {
        let z = Complex::from_polar(1.0, omega);
        (z - 1.0) * self.c / (z * z + z * self.d1 + self.d2)
    }

    /// Advances the state with `J_i` and returns the new output.
    pub fn step(&mut self, j: f64) -> f64 {
        self.w = self.phi * self.w + self.gamma * j;
        self.output()
    }

    pub fn output(&self) -> f64 {
        (self.psi * self.w)[0]
    }

    /// Places the state at the equilibrium for a constant input `j`, so a
    /// stream starting at `j` produces no transient.
    pub fn settle(&mut self, j: f64) {
        let m = Matrix2::identity() - self.phi;
        self.w = m.try_inverse().expect("no pole at DC") * self.gamma * j;
    }

    pub fn reset(&mut self) {
        self.w = Vector2::zeros();
    }
}
