//! Grey-box subject: a concave preference map feeding an iteration-domain
//! LTI adaptation model, with additive Gaussian motor noise on the output.

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Admissible synergy range. Everything the tuners emit is projected onto it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynergyBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for SynergyBounds {
    fn default() -> Self {
        Self { min: 0.8, max: 2.4 }
    }
}

impl SynergyBounds {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        let b = Self { min, max };
        b.validate("bounds")?;
        Ok(b)
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(invalid(field, format!("need finite min < max, got [{}, {}]", self.min, self.max)));
        }
        Ok(())
    }

    pub fn clamp(&self, theta: f64) -> f64 {
        theta.clamp(self.min, self.max)
    }

    pub fn contains(&self, theta: f64) -> bool {
        theta >= self.min && theta <= self.max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// `[θ², θ, 1]`
    #[default]
    Quadratic,
    /// Descending powers of θ, any degree. Evaluation only.
    Polynomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceMap {
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub basis: Basis,
}

impl PreferenceMap {
    pub fn quadratic(lambda: [f64; 3]) -> Self {
        Self {
            lambda: lambda.to_vec(),
            basis: Basis::Quadratic,
        }
    }

    pub fn polynomial(lambda: Vec<f64>) -> Self {
        Self {
            lambda,
            basis: Basis::Polynomial,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.basis == Basis::Quadratic && self.lambda.len() != 3 {
            return Err(invalid("lambda", format!("quadratic basis needs 3 coefficients, got {}", self.lambda.len())));
        }
        if self.lambda.is_empty() || self.lambda.iter().any(|v| !v.is_finite()) {
            return Err(invalid("lambda", "coefficients must be finite and non-empty"));
        }
        Ok(())
    }

    /// Steady-state performance `f(θ)ᵀλ`.
    pub fn eval(&self, theta: f64) -> f64 {
        self.lambda.iter().fold(0.0, |acc, c| acc * theta + c)
    }

    fn quad(&self) -> Result<(f64, f64, f64)> {
        match self.basis {
            Basis::Quadratic => Ok((self.lambda[0], self.lambda[1], self.lambda[2])),
            other => Err(Error::UnsupportedBasis(other)),
        }
    }

    /// Analytic `(u′, u″)` at θ.
    pub fn derivatives(&self, theta: f64) -> Result<(f64, f64)> {
        let (l1, l2, _) = self.quad()?;
        Ok((2.0 * l1 * theta + l2, 2.0 * l1))
    }

    pub fn is_concave(&self) -> bool {
        matches!(self.quad(), Ok((l1, _, _)) if l1 < 0.0)
    }

    /// Vertex of the parabola, the unique maximizer when the map is concave.
    pub fn optimal_synergy(&self) -> Result<f64> {
        let (l1, l2, _) = self.quad()?;
        if !(l1 < 0.0) {
            return Err(Error::NotConcave(l1));
        }
        Ok(-l2 / (2.0 * l1))
    }

    pub fn peak_performance(&self) -> Result<f64> {
        let (l1, l2, l3) = self.quad()?;
        if !(l1 < 0.0) {
            return Err(Error::NotConcave(l1));
        }
        Ok(l3 - l2 * l2 / (4.0 * l1))
    }
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// `x' = Φx + Γu`, `y = Ψx`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationDynamics {
    phi: DMatrix<f64>,
    gamma: DVector<f64>,
    psi: RowDVector<f64>,
}

impl AdaptationDynamics {
    pub fn new(phi: DMatrix<f64>, gamma: DVector<f64>, psi: RowDVector<f64>) -> Result<Self> {
        let n = phi.nrows();
        if n == 0 || phi.ncols() != n || gamma.len() != n || psi.len() != n {
            return Err(Error::Dimension(format!(
                "phi {}x{}, gamma {}, psi {}",
                phi.nrows(),
                phi.ncols(),
                gamma.len(),
                psi.len()
            )));
        }
        if phi.iter().chain(gamma.iter()).chain(psi.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("phi/gamma/psi", "entries must be finite"));
        }
        let radius = spectral_radius(&phi);
        if radius >= 1.0 {
            return Err(Error::Unstable { what: "adaptation dynamics", radius });
        }
        Ok(Self { phi, gamma, psi })
    }

    pub fn from_rows(phi: &[Vec<f64>], gamma: &[f64], psi: &[f64]) -> Result<Self> {
        let n = phi.len();
        if phi.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("phi must be square".into()));
        }
        let flat: Vec<f64> = phi.iter().flatten().copied().collect();
        Self::new(
            DMatrix::from_row_slice(n, n, &flat),
            DVector::from_column_slice(gamma),
            RowDVector::from_row_slice(psi),
        )
    }

    /// Observable companion form: ones on the superdiagonal, last row
    /// `[-a_n … -a_1]`, `Ψ = e₁`, and `Γ` holding the Markov parameters.
    pub fn companion(den: &[f64], markov: &[f64]) -> Result<Self> {
        let n = den.len();
        if markov.len() != n {
            return Err(Error::Dimension(format!("{} denominator coeffs, {} Markov parameters", n, markov.len())));
        }
        let mut phi = DMatrix::zeros(n, n);
        for r in 0..n.saturating_sub(1) {
            phi[(r, r + 1)] = 1.0;
        }
        for c in 0..n {
            phi[(n - 1, c)] = -den[n - 1 - c];
        }
        let mut psi = RowDVector::zeros(n);
        psi[0] = 1.0;
        Self::new(phi, DVector::from_column_slice(markov), psi)
    }

    pub fn order(&self) -> usize {
        self.phi.nrows()
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn gamma(&self) -> &DVector<f64> {
        &self.gamma
    }

    pub fn psi(&self) -> &RowDVector<f64> {
        &self.psi
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.phi)
    }

    /// One iteration: returns `(Φx + Γu, Ψx)`.
    pub fn step(&self, x: &DVector<f64>, u: f64) -> Result<(DVector<f64>, f64)> {
        if x.len() != self.order() {
            return Err(Error::Dimension(format!("state has {} entries, order is {}", x.len(), self.order())));
        }
        let y = self.psi.dot(&x.transpose());
        Ok((&self.phi * x + &self.gamma * u, y))
    }

    /// `Ψ(I − Φ)⁻¹Γ`
    pub fn steady_state_gain(&self) -> Result<f64> {
        let n = self.order();
        let m = DMatrix::identity(n, n) - &self.phi;
        let sol = m.lu().solve(&self.gamma).ok_or(Error::SingularGain)?;
        let g = self.psi.dot(&sol.transpose());
        if !g.is_finite() {
            return Err(Error::SingularGain);
        }
        Ok(g)
    }

    /// Scales `Γ` so the steady-state gain is exactly one.
    pub fn normalized(&self) -> Result<Self> {
        let g = self.steady_state_gain()?;
        if g == 0.0 {
            return Err(Error::ZeroGain);
        }
        Ok(Self {
            phi: self.phi.clone(),
            gamma: &self.gamma / g,
            psi: self.psi.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotorNoise {
    pub mean: f64,
    pub std_dev: f64,
    pub seed: u64,
}

impl MotorNoise {
    pub fn none() -> Self {
        Self { mean: 0.0, std_dev: 0.0, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean.is_finite() {
            return Err(invalid("noise_mean", "must be finite"));
        }
        if !(self.std_dev.is_finite() && self.std_dev >= 0.0) {
            return Err(invalid("noise_std", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn sampler(&self) -> Result<NoiseSampler> {
        self.validate()?;
        Ok(NoiseSampler {
            rng: ChaCha8Rng::seed_from_u64(self.seed),
            dist: Normal::new(self.mean, self.std_dev).map_err(|e| invalid("noise_std", e.to_string()))?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct NoiseSampler {
    rng: ChaCha8Rng,
    dist: Normal<f64>,
}

impl NoiseSampler {
    pub fn sample(&mut self) -> f64 {
        self.dist.sample(&mut self.rng)
    }
}

/// Preference map in series with the adaptation dynamics, output noise added.
#[derive(Debug, Clone)]
pub struct SimulatedSubject {
    map: PreferenceMap,
    dynamics: AdaptationDynamics,
    noise: MotorNoise,
    sampler: NoiseSampler,
    state: DVector<f64>,
}

impl SimulatedSubject {
    pub fn new(map: PreferenceMap, dynamics: AdaptationDynamics, noise: MotorNoise) -> Result<Self> {
        let n = dynamics.order();
        Self::with_state(map, dynamics, noise, DVector::zeros(n))
    }

    pub fn with_state(
        map: PreferenceMap,
        dynamics: AdaptationDynamics,
        noise: MotorNoise,
        state: DVector<f64>,
    ) -> Result<Self> {
        map.validate()?;
        if state.len() != dynamics.order() {
            return Err(invalid("initial_state", format!("expected {} entries, got {}", dynamics.order(), state.len())));
        }
        let sampler = noise.sampler()?;
        Ok(Self { map, dynamics, noise, sampler, state })
    }

    pub fn map(&self) -> &PreferenceMap {
        &self.map
    }

    pub fn dynamics(&self) -> &AdaptationDynamics {
        &self.dynamics
    }

    pub fn noise(&self) -> &MotorNoise {
        &self.noise
    }

    pub fn state(&self) -> &DVector<f64> {
        &self.state
    }

    /// Performance for one task repetition at synergy θ.
    pub fn step(&mut self, theta: f64) -> f64 {
        let u = self.map.eval(theta);
        let y = self.dynamics.psi.dot(&self.state.transpose());
        self.state = &self.dynamics.phi * &self.state + &self.dynamics.gamma * u;
        y + self.sampler.sample()
    }
}

/// On-disk subject description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub basis: Basis,
    pub phi: Vec<Vec<f64>>,
    pub gamma: Vec<f64>,
    pub psi: Vec<f64>,
    #[serde(default)]
    pub noise_mean: f64,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<Vec<f64>>,
}

impl SubjectConfig {
    pub fn map(&self) -> PreferenceMap {
        PreferenceMap {
            lambda: self.lambda.clone(),
            basis: self.basis,
        }
    }

    pub fn dynamics(&self) -> Result<AdaptationDynamics> {
        AdaptationDynamics::from_rows(&self.phi, &self.gamma, &self.psi)
    }

    pub fn noise(&self) -> MotorNoise {
        MotorNoise {
            mean: self.noise_mean,
            std_dev: self.noise_std,
            seed: self.seed,
        }
    }

    pub fn build(&self) -> Result<SimulatedSubject> {
        let dynamics = self.dynamics()?;
        let x0 = match &self.initial_state {
            Some(v) => DVector::from_column_slice(v),
            None => DVector::zeros(dynamics.order()),
        };
        SimulatedSubject::with_state(self.map(), dynamics, self.noise(), x0)
    }

    pub fn noise_free(mut self) -> Self {
        self.noise_std = 0.0;
        self.noise_mean = 0.0;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| invalid("subject", e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("subject config serializes")
    }

    pub fn from_dynamics(map: &PreferenceMap, dynamics: &AdaptationDynamics, noise: MotorNoise) -> Self {
        let n = dynamics.order();
        Self {
            id: None,
            lambda: map.lambda.clone(),
            basis: map.basis,
            phi: (0..n).map(|r| dynamics.phi.row(r).iter().copied().collect()).collect(),
            gamma: dynamics.gamma.iter().copied().collect(),
            psi: dynamics.psi.iter().copied().collect(),
            noise_mean: noise.mean,
            noise_std: noise.std_dev,
            seed: noise.seed,
            initial_state: None,
        }
    }
}

/// The two subjects identified from sweep data, with their residual statistics.
pub mod subjects {
    use super::SubjectConfig;

    pub const THETA_STAR_A: f64 = 1.6731;
    pub const THETA_STAR_B: f64 = 1.7786;

    pub fn subject_a() -> SubjectConfig {
        SubjectConfig {
            id: Some("A".into()),
            lambda: vec![-158.15, 529.18, -293.34],
            basis: Default::default(),
            phi: vec![vec![0.0, 1.0], vec![0.068, 0.35]],
            gamma: vec![0.839, 0.037],
            psi: vec![1.0, 0.0],
            noise_mean: 0.0,
            noise_std: 16.81,
            seed: 0,
            initial_state: None,
        }
    }

    pub fn subject_b() -> SubjectConfig {
        SubjectConfig {
            id: Some("B".into()),
            lambda: vec![-96.18, 342.13, -147.86],
            basis: Default::default(),
            phi: vec![vec![0.0, 1.0], vec![-0.017, 0.25]],
            gamma: vec![-0.091, 0.834],
            psi: vec![1.0, 0.0],
            noise_mean: 0.0,
            noise_std: 22.36,
            seed: 0,
            initial_state: None,
        }
    }

    pub fn by_id(id: &str) -> Option<SubjectConfig> {
        match id.to_ascii_uppercase().as_str() {
            "A" => Some(subject_a()),
            "B" => Some(subject_b()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::subjects::*;
    use super::*;

    fn lam_a() -> PreferenceMap {
        PreferenceMap::quadratic([-158.15, 529.18, -293.34])
    }

    fn lam_b() -> PreferenceMap {
        PreferenceMap::quadratic([-96.18, 342.13, -147.86])
    }

    fn grid_argmax(map: &PreferenceMap) -> f64 {
        (0..=16000)
            .map(|k| 0.8 + k as f64 * 1e-4)
            .max_by(|a, b| map.eval(*a).total_cmp(&map.eval(*b)))
            .unwrap()
    }

    #[test]
    fn eval_spot_values() {
        assert!((lam_a().eval(1.0) - 77.69).abs() < 1e-9);
        assert_eq!(PreferenceMap::quadratic([0.0, 0.0, 4.5]).eval(-3.0), 4.5);
        let b = lam_b();
        let vertex = 342.13 / 192.36;
        // independent vertex-value formula
        let expect = -147.86 - 342.13f64.powi(2) / (4.0 * -96.18);
        assert!((b.eval(vertex) - expect).abs() < 1e-9);
        assert!((b.eval(THETA_STAR_B) - 156.40).abs() < 0.05);
    }

    #[test]
    fn derivatives_against_differences() {
        let h = 1e-6;
        let a = lam_a();
        let fd = (a.eval(1.0 + h) - a.eval(1.0 - h)) / (2.0 * h);
        let (g, _) = a.derivatives(1.0).unwrap();
        assert!((g - fd).abs() < 1e-5);
        assert!((g - 212.88).abs() < 1e-9);
        assert!(a.derivatives(a.optimal_synergy().unwrap()).unwrap().0.abs() < 1e-9);
        let b = lam_b();
        let h = 1e-3;
        let fd2 = (b.eval(1.3 + h) - 2.0 * b.eval(1.3) + b.eval(1.3 - h)) / (h * h);
        assert!((b.derivatives(0.3).unwrap().1 - fd2).abs() < 1e-4);
        assert!((fd2 + 192.36).abs() < 1e-4);
    }

    #[test]
    fn optimum_matches_grid() {
        for (map, star) in [(lam_a(), THETA_STAR_A), (lam_b(), THETA_STAR_B)] {
            let t = map.optimal_synergy().unwrap();
            assert!((t - grid_argmax(&map)).abs() <= 1e-4);
            assert!((t - star).abs() < 1e-4);
        }
        assert_eq!(PreferenceMap::quadratic([-1.0, 0.0, 0.0]).optimal_synergy().unwrap(), 0.0);
        assert!(matches!(
            PreferenceMap::quadratic([1.0, 0.0, 0.0]).optimal_synergy(),
            Err(Error::NotConcave(_))
        ));
        assert!(matches!(
            PreferenceMap::polynomial(vec![1.0, 2.0]).derivatives(0.0),
            Err(Error::UnsupportedBasis(Basis::Polynomial))
        ));
    }

    #[test]
    fn lti_one_step() {
        let d = subject_a().dynamics().unwrap();
        let (x, y) = d.step(&DVector::zeros(2), 1.0).unwrap();
        assert_eq!(y, 0.0);
        assert_eq!(x.as_slice(), &[0.839, 0.037]);
        let (x, y) = d.step(&DVector::zeros(2), 0.0).unwrap();
        assert_eq!((x.norm(), y), (0.0, 0.0));
        assert!(d.step(&DVector::zeros(3), 1.0).is_err());
    }

    #[test]
    fn lti_settles_to_input() {
        let d = subject_a().dynamics().unwrap();
        let mut x = DVector::zeros(2);
        let mut y = 0.0;
        for _ in 0..200 {
            (x, y) = d.step(&x, 100.0).unwrap();
        }
        assert!((y - 100.0).abs() < 1.0);
    }

    #[test]
    fn gains() {
        // det(I − Φ_A) = 0.65·1 − 0.068 = 0.582, adj(I − Φ_A)Γ first row: 0.65·0.839 + 0.037
        let expect_a = (0.65 * 0.839 + 0.037) / 0.582;
        let a = subject_a().dynamics().unwrap();
        assert!((a.steady_state_gain().unwrap() - expect_a).abs() < 1e-12);
        assert!((a.steady_state_gain().unwrap() - 1.0006).abs() < 1e-3);
        assert!((a.normalized().unwrap().steady_state_gain().unwrap() - 1.0).abs() < 1e-12);
        let b = subject_b().dynamics().unwrap();
        assert!((b.steady_state_gain().unwrap() - 1.0).abs() < 2e-2);
        let unity = AdaptationDynamics::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]], &[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!(unity.steady_state_gain().unwrap(), 1.0);
        let n = unity.normalized().unwrap();
        assert_eq!(n, unity);
        let double = AdaptationDynamics::from_rows(&[vec![0.5]], &[1.0], &[1.0]).unwrap();
        assert_eq!(double.steady_state_gain().unwrap(), 2.0);
        assert!((double.normalized().unwrap().steady_state_gain().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unstable_rejected() {
        let r = AdaptationDynamics::from_rows(&[vec![1.0]], &[1.0], &[1.0]);
        assert!(matches!(r, Err(Error::Unstable { .. })));
    }

    #[test]
    fn companion_matches_subject_a() {
        // Φ_A is already in companion form: z² − 0.35z − 0.068
        let c = AdaptationDynamics::companion(&[-0.35, -0.068], &[0.839, 0.037]).unwrap();
        assert_eq!(c, subject_a().dynamics().unwrap());
    }

    #[test]
    fn subject_cold_start_and_vertex() {
        let mut s = subject_a().noise_free().build().unwrap();
        assert_eq!(s.step(THETA_STAR_A), 0.0);
        let mut j = 0.0;
        for _ in 1..200 {
            j = s.step(THETA_STAR_A);
        }
        let vertex = -293.34 - 529.18f64.powi(2) / (4.0 * -158.15);
        assert!((vertex - 149.33).abs() < 0.01);
        assert!((j - vertex).abs() < 0.5, "{j}");
    }

    #[test]
    fn noise_statistics() {
        let mut s = subject_a().with_seed(3).build().unwrap();
        let js: Vec<f64> = (0..1200).map(|_| s.step(1.4)).skip(200).collect();
        let mean = js.iter().sum::<f64>() / js.len() as f64;
        let sd = (js.iter().map(|j| (j - mean).powi(2)).sum::<f64>() / (js.len() - 1) as f64).sqrt();
        assert!((15.0..=19.0).contains(&sd), "{sd}");
    }

    #[test]
    fn seeds_reproduce() {
        let run = |seed| {
            let mut s = subject_b().with_seed(seed).build().unwrap();
            (0..50).map(|i| s.step(1.0 + i as f64 * 0.01)).collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }

    #[test]
    fn config_round_trip() {
        let mut c = subject_b();
        c.initial_state = Some(vec![1.0, 2.0]);
        let back = SubjectConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert!(SubjectConfig::from_toml("lambda = [1.0]").is_err());
    }
}
