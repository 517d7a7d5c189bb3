//! Grey-box identification from iteration data: least-squares preference map,
//! over-damped LTI fit with unity gain, and residual whiteness analysis.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{AdaptationDynamics, MotorNoise, PreferenceMap, SubjectConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateSample {
    pub theta: f64,
    pub mean_performance: f64,
    pub std_performance: f64,
    pub count: usize,
}

impl SteadyStateSample {
    pub fn exact(theta: f64, performance: f64) -> Self {
        Self {
            theta,
            mean_performance: performance,
            std_performance: 0.0,
            count: 1,
        }
    }
}

/// Pools repeated measurements taken at the same synergy value.
pub fn group_by_theta(theta: &[f64], performance: &[f64]) -> Vec<SteadyStateSample> {
    let mut groups: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
    for (&t, &j) in theta.iter().zip(performance) {
        groups.entry(t.to_bits()).or_insert((t, Vec::new())).1.push(j);
    }
    let mut out: Vec<SteadyStateSample> = groups
        .into_values()
        .map(|(t, js)| {
            let n = js.len() as f64;
            let mean = js.iter().sum::<f64>() / n;
            let var = if js.len() > 1 {
                js.iter().map(|j| (j - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            SteadyStateSample {
                theta: t,
                mean_performance: mean,
                std_performance: var.sqrt(),
                count: js.len(),
            }
        })
        .collect();
    out.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapFit {
    pub map: PreferenceMap,
    /// False when the fitted leading coefficient is not negative: there is
    /// then no interior maximum to seek.
    pub concave: bool,
    pub sse: f64,
}

fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let tol = svd.singular_values.max() * 1e-13 * a.nrows().max(a.ncols()) as f64;
    svd.solve(b, tol).ok()
}

// A curvature at rounding level of the other coefficients is flat, not concave.
fn numerically_concave(map: &PreferenceMap) -> bool {
    let scale = map.lambda.iter().map(|v| v.abs()).fold(0.0, f64::max);
    map.lambda[0] < -1e-9 * scale
}

pub fn fit_preference_map(samples: &[SteadyStateSample]) -> Result<MapFit> {
    let mut distinct: Vec<f64> = samples.iter().map(|s| s.theta).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "quadratic fit needs 3 distinct synergy values, got {}",
            distinct.len()
        )));
    }
    if samples.iter().any(|s| !(s.theta.is_finite() && s.mean_performance.is_finite())) {
        return Err(Error::InsufficientData("samples must be finite".into()));
    }
    let a = DMatrix::from_fn(samples.len(), 3, |r, c| samples[r].theta.powi(2 - c as i32));
    let b = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.mean_performance));
    let x = lstsq(&a, &b).ok_or_else(|| Error::InsufficientData("least squares failed".into()))?;
    let sse = (&a * &x - &b).norm_squared();
    let map = PreferenceMap::quadratic([x[0], x[1], x[2]]);
    Ok(MapFit {
        concave: numerically_concave(&map),
        map,
        sse,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LtiFit {
    pub dynamics: AdaptationDynamics,
    pub initial_state: DVector<f64>,
    /// Real poles, descending.
    pub poles: Vec<f64>,
    pub mse: f64,
    pub residuals: Vec<f64>,
    /// Set when the best candidate sits on the edge of the admissible pole
    /// region, i.e. the unconstrained optimum is not over-damped.
    pub constraint_active: bool,
}

const POLE_LO: f64 = 1e-6;
// a double pole any closer to 1 leaves I − Φ too ill-conditioned to pin the gain
const POLE_HI: f64 = 1.0 - 1e-3;

fn poly_from_poles(poles: &[f64]) -> Vec<f64> {
    // z^n + a_1 z^{n-1} + ... + a_n, returns [a_1..a_n]
    let mut c = vec![1.0];
    for &p in poles {
        let mut next = vec![0.0; c.len() + 1];
        for (i, &ci) in c.iter().enumerate() {
            next[i] += ci;
            next[i + 1] -= p * ci;
        }
        c = next;
    }
    c[1..].to_vec()
}

/// Regressors for fixed poles: the forced-response columns under the
/// unity-gain constraint and the free-response basis.
struct Regression {
    den: Vec<f64>,
    target: DVector<f64>,
    design: DMatrix<f64>,
}

fn regression(poles: &[f64], u: &[f64], j: &[f64]) -> Regression {
    let n = poles.len();
    let big_n = u.len();
    let den = poly_from_poles(poles);
    let d1 = 1.0 + den.iter().sum::<f64>();
    // s = u / A(q⁻¹)
    let mut s = vec![0.0; big_n];
    for t in 0..big_n {
        let mut v = u[t];
        for (m, a) in den.iter().enumerate() {
            if t > m {
                v -= a * s[t - m - 1];
            }
        }
        s[t] = v;
    }
    let delayed = |k: usize, t: usize| if t >= k { s[t - k] } else { 0.0 };
    let mut design = DMatrix::zeros(big_n, 2 * n - 1);
    let mut target = DVector::zeros(big_n);
    for t in 0..big_n {
        let rn = delayed(n, t);
        target[t] = j[t] - d1 * rn;
        for k in 1..n {
            design[(t, k - 1)] = delayed(k, t) - rn;
        }
    }
    for m in 0..n {
        let col = n - 1 + m;
        let mut h = vec![0.0; big_n];
        for t in 0..big_n {
            h[t] = if t < n {
                if t == m { 1.0 } else { 0.0 }
            } else {
                -den.iter().enumerate().map(|(i, a)| a * h[t - i - 1]).sum::<f64>()
            };
            design[(t, col)] = h[t];
        }
    }
    Regression { den, target, design }
}

struct Candidate {
    poles: Vec<f64>,
    sse: f64,
    den: Vec<f64>,
    params: DVector<f64>,
}

fn evaluate(poles: &[f64], u: &[f64], j: &[f64]) -> Option<Candidate> {
    let reg = regression(poles, u, j);
    let params = lstsq(&reg.design, &reg.target)?;
    let sse = (&reg.design * &params - &reg.target).norm_squared();
    sse.is_finite().then(|| Candidate {
        poles: poles.to_vec(),
        sse,
        den: reg.den,
        params,
    })
}

fn grid_tuples(n: usize, g: usize) -> Vec<Vec<f64>> {
    let pts: Vec<f64> = (0..g).map(|i| (i as f64 + 0.5) / g as f64).collect();
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|v: Vec<f64>| {
                let last = v.last().copied().unwrap_or(f64::INFINITY);
                pts.iter()
                    .rev()
                    .filter(move |&&p| p <= last)
                    .map(move |&p| {
                        let mut w = v.clone();
                        w.push(p);
                        w
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    out
}

fn sorted(mut p: Vec<f64>) -> Vec<f64> {
    p.sort_by(|a, b| b.total_cmp(a));
    p
}

/// Pattern search on the pole tuple, step halving down to 1e-9.
fn refine(start: Candidate, u: &[f64], j: &[f64], h0: f64) -> Candidate {
    let n = start.poles.len();
    let mut best = start;
    let mut h = h0;
    let offsets: Vec<Vec<f64>> = (0..3usize.pow(n as u32))
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let d = (code % 3) as f64 - 1.0;
                    code /= 3;
                    d
                })
                .collect()
        })
        .filter(|o: &Vec<f64>| o.iter().any(|&d| d != 0.0))
        .collect();
    while h > 1e-9 {
        let mut improved = false;
        for o in &offsets {
            let trial: Vec<f64> = best
                .poles
                .iter()
                .zip(o)
                .map(|(p, d)| (p + d * h).clamp(POLE_LO, POLE_HI))
                .collect();
            if let Some(c) = evaluate(&sorted(trial), u, j) {
                if c.sse < best.sse {
                    best = c;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    best
}

fn search(order: usize, u: &[f64], j: &[f64], seeds: Vec<Vec<f64>>) -> Option<Candidate> {
    let g = if order == 2 { 40 } else { 16 };
    let mut coarse: Vec<Candidate> = grid_tuples(order, g)
        .into_iter()
        .chain(seeds)
        .filter_map(|p| evaluate(&p, u, j))
        .collect();
    coarse.sort_by(|a, b| a.sse.total_cmp(&b.sse));
    coarse.truncate(3);
    coarse
        .into_iter()
        .map(|c| refine(c, u, j, 0.5 / g as f64))
        .min_by(|a, b| a.sse.total_cmp(&b.sse))
}

fn to_fit(c: Candidate, u: &[f64], j: &[f64]) -> Result<LtiFit> {
    let n = c.poles.len();
    let d1 = 1.0 + c.den.iter().sum::<f64>();
    let mut b: Vec<f64> = (0..n - 1).map(|k| c.params[k]).collect();
    b.push(d1 - b.iter().sum::<f64>());
    let mut markov = vec![0.0; n];
    for k in 0..n {
        markov[k] = b[k] - (0..k).map(|m| c.den[m] * markov[k - m - 1]).sum::<f64>();
    }
    let dynamics = AdaptationDynamics::companion(&c.den, &markov)?.normalized()?;
    let x0 = DVector::from_iterator(n, (0..n).map(|m| c.params[n - 1 + m]));
    let residuals = simulate(&dynamics, &x0, u)
        .iter()
        .zip(j)
        .map(|(y, jj)| jj - y)
        .collect::<Vec<_>>();
    let mse = residuals.iter().map(|r| r * r).sum::<f64>() / u.len() as f64;
    let constraint_active = c.poles.iter().any(|&p| p <= POLE_LO * 10.0 || p >= 1.0 - 2e-3);
    Ok(LtiFit {
        dynamics,
        initial_state: x0,
        poles: c.poles,
        mse,
        residuals,
        constraint_active,
    })
}

/// Noise-free output sequence of `dyn` from `x0` under input `u`.
pub fn simulate(dynamics: &AdaptationDynamics, x0: &DVector<f64>, u: &[f64]) -> Vec<f64> {
    let mut x = x0.clone();
    u.iter()
        .map(|&ui| {
            let (next, y) = dynamics.step(&x, ui).expect("state matches order");
            x = next;
            y
        })
        .collect()
}

/// Output-error fit of an over-damped (real poles in (0,1)), unity-gain LTI
/// model with a free initial state. The reported MSE is that of the
/// simulated model response against `j`.
pub fn fit_adaptation_lti(u: &[f64], j: &[f64], order: usize) -> Result<LtiFit> {
    if !(order == 2 || order == 3) {
        return Err(Error::InsufficientData(format!("order must be 2 or 3, got {order}")));
    }
    if u.len() != j.len() {
        return Err(Error::Dimension(format!("u has {} samples, J has {}", u.len(), j.len())));
    }
    if u.len() < 10 * order {
        return Err(Error::InsufficientData(format!(
            "order {order} needs at least {} samples, got {}",
            10 * order,
            u.len()
        )));
    }
    if u.iter().chain(j).any(|v| !v.is_finite()) {
        return Err(Error::InsufficientData("series must be finite".into()));
    }
    let lower = if order == 3 { search(2, u, j, vec![]) } else { None };
    let seeds = match &lower {
        // pole-zero cancellation: every order-2 model is an order-3 model
        Some(c) => (1..20).map(|k| sorted(vec![c.poles[0], c.poles[1], k as f64 / 20.0])).collect(),
        None => vec![],
    };
    let best = search(order, u, j, seeds).ok_or_else(|| Error::InsufficientData("no admissible candidate".into()))?;
    to_fit(best, u, j)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhitenessReport {
    pub max_normalized_autocorr: f64,
    pub threshold: f64,
    pub passed: bool,
    pub lags_tested: usize,
    pub residual_mean: f64,
    pub residual_std: f64,
}

/// Lags examined by [`whiteness_test`].
pub const DEFAULT_WHITENESS_LAGS: usize = 1;

/// Residual independence test at the given confidence, lag 1.
pub fn whiteness_test(residuals: &[f64], confidence: f64) -> Result<WhitenessReport> {
    whiteness_test_lags(residuals, confidence, DEFAULT_WHITENESS_LAGS)
}

/// Two-sided bound `z/√N` on the normalized autocorrelation at lags
/// `1..=min(max_lag, N/4)`. The autocorrelation is not mean-corrected.
pub fn whiteness_test_lags(residuals: &[f64], confidence: f64, max_lag: usize) -> Result<WhitenessReport> {
    let n = residuals.len();
    if n < 20 {
        return Err(Error::InsufficientData(format!("whiteness test needs N >= 20, got {n}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(crate::error::invalid("confidence", "must lie in (0, 1)"));
    }
    let threshold = whiteness_threshold(n, confidence);
    let lags = max_lag.clamp(1, n / 4);
    let r0: f64 = residuals.iter().map(|e| e * e).sum();
    let max_r = if r0 == 0.0 {
        0.0
    } else {
        (1..=lags)
            .map(|k| (residuals.iter().zip(&residuals[k..]).map(|(a, b)| a * b).sum::<f64>() / r0).abs())
            .fold(0.0, f64::max)
    };
    let mean = residuals.iter().sum::<f64>() / n as f64;
    let std = (residuals.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    Ok(WhitenessReport {
        max_normalized_autocorr: max_r,
        threshold,
        passed: max_r < threshold,
        lags_tested: lags,
        residual_mean: mean,
        residual_std: std,
    })
}

pub fn whiteness_threshold(n: usize, confidence: f64) -> f64 {
    let z = Normal::standard().inverse_cdf(0.5 * (1.0 + confidence));
    z / (n as f64).sqrt()
}

/// Everything `identify` learns from one iteration log.
#[derive(Debug, Clone)]
pub struct Identification {
    pub map_fit: MapFit,
    pub lti: LtiFit,
    pub order_mse: Vec<(usize, f64)>,
    pub whiteness: WhitenessReport,
    pub noise: MotorNoise,
}

impl Identification {
    pub fn subject_config(&self) -> SubjectConfig {
        SubjectConfig::from_dynamics(&self.map_fit.map, &self.lti.dynamics, self.noise)
    }

    pub fn report(&self) -> String {
        let l = &self.map_fit.map.lambda;
        let mut s = String::new();
        s.push_str("[preference_map]\n");
        s.push_str(&format!("lambda = [{}, {}, {}]\n", l[0], l[1], l[2]));
        s.push_str(&format!("concave = {}\n", self.map_fit.concave));
        if let Ok(t) = self.map_fit.map.optimal_synergy() {
            s.push_str(&format!("theta_star = {t}\n"));
        }
        s.push_str("\n[adaptation]\n");
        s.push_str(&format!("order = {}\n", self.lti.dynamics.order()));
        s.push_str(&format!("poles = {:?}\n", self.lti.poles));
        s.push_str(&format!("constraint_active = {}\n", self.lti.constraint_active));
        for (order, mse) in &self.order_mse {
            s.push_str(&format!("mse_order_{order} = {mse}\n"));
        }
        let w = &self.whiteness;
        s.push_str("\n[residuals]\n");
        s.push_str(&format!("mean = {}\nstd = {}\n", w.residual_mean, w.residual_std));
        s.push_str(&format!(
            "max_autocorr = {}\nthreshold = {}\nlags = {}\nwhite = {}\n",
            w.max_normalized_autocorr, w.threshold, w.lags_tested, w.passed
        ));
        s
    }
}

/// Fits map and dynamics to a `(θ_i, J_i)` log. The map is first fitted to
/// per-θ means, then map and dynamics are refitted alternately so the
/// adaptation lag does not bias the map. Orders 2 and 3 are both fitted and
/// the lower order is kept, as is the one reported.
pub fn identify(theta: &[f64], performance: &[f64], rounds: usize) -> Result<Identification> {
    if theta.len() != performance.len() {
        return Err(Error::Dimension("theta and performance lengths differ".into()));
    }
    let mut map_fit = fit_preference_map(&group_by_theta(theta, performance))?;
    let mut lti = fit_adaptation_lti(&map_inputs(&map_fit.map, theta), performance, 2)?;
    for _ in 0..rounds {
        map_fit = refit_map_through(&lti, theta, performance)?;
        lti = fit_adaptation_lti(&map_inputs(&map_fit.map, theta), performance, 2)?;
    }
    let lti3 = fit_adaptation_lti(&map_inputs(&map_fit.map, theta), performance, 3)?;
    let whiteness = whiteness_test(&lti.residuals, 0.95)?;
    let noise = MotorNoise {
        mean: whiteness.residual_mean,
        std_dev: whiteness.residual_std,
        seed: 0,
    };
    Ok(Identification {
        order_mse: vec![(2, lti.mse), (3, lti3.mse)],
        map_fit,
        lti,
        whiteness,
        noise,
    })
}

fn map_inputs(map: &PreferenceMap, theta: &[f64]) -> Vec<f64> {
    theta.iter().map(|&t| map.eval(t)).collect()
}

/// Least-squares map with the dynamics held fixed: each basis function is
/// passed through the LTI model and the initial state is re-estimated.
fn refit_map_through(lti: &LtiFit, theta: &[f64], performance: &[f64]) -> Result<MapFit> {
    let d = &lti.dynamics;
    let n = d.order();
    let big_n = theta.len();
    let mut a = DMatrix::zeros(big_n, 3 + n);
    for c in 0..3 {
        let basis: Vec<f64> = theta.iter().map(|t| t.powi(2 - c as i32)).collect();
        for (t, y) in simulate(d, &DVector::zeros(n), &basis).into_iter().enumerate() {
            a[(t, c)] = y;
        }
    }
    for m in 0..n {
        let mut e = DVector::zeros(n);
        e[m] = 1.0;
        for (t, y) in simulate(d, &e, &vec![0.0; big_n]).into_iter().enumerate() {
            a[(t, 3 + m)] = y;
        }
    }
    let b = DVector::from_column_slice(performance);
    let x = lstsq(&a, &b).ok_or_else(|| Error::InsufficientData("map refit failed".into()))?;
    let map = PreferenceMap::quadratic([x[0], x[1], x[2]]);
    Ok(MapFit {
        concave: numerically_concave(&map),
        sse: (&a * &x - &b).norm_squared(),
        map,
    })
}
