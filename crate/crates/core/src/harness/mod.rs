//! Experiment orchestration: closed-loop episodes, the synergy sweep,
//! seeded Monte Carlo batches, and side-by-side comparison of trace sets.

pub mod svg;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baseline::{BaselineConfig, BlackBoxEs};
use crate::error::{invalid, Error, Result};
use crate::model::{subjects, MotorNoise, SimulatedSubject, SubjectConfig};
use crate::personalizer::{Personalizer, PersonalizerConfig};
use crate::plant::{simulate_reach, ArmGeometry, KinematicSubject, ReachTask, ShoulderProfile};
use crate::trace::{EpisodeTrace, TraceMeta, TraceRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KinematicConfig {
    pub geometry: ArmGeometry,
    pub task: ReachTask,
    pub profile: ShoulderProfile,
    pub noise_mean: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for KinematicConfig {
    fn default() -> Self {
        Self {
            geometry: ArmGeometry::default(),
            task: ReachTask::default(),
            profile: ShoulderProfile::default(),
            noise_mean: 0.0,
            noise_std: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SubjectSpec {
    Greybox(SubjectConfig),
    Kinematic(KinematicConfig),
}

impl Default for SubjectSpec {
    fn default() -> Self {
        SubjectSpec::Greybox(subjects::subject_a())
    }
}

impl SubjectSpec {
    /// `A`, `B`, or a path to a TOML file holding a `[subject]` table or a
    /// bare subject definition.
    pub fn resolve(id_or_path: &str) -> Result<Self> {
        if let Some(s) = subjects::by_id(id_or_path) {
            return Ok(SubjectSpec::Greybox(s));
        }
        if id_or_path.eq_ignore_ascii_case("kinematic") {
            return Ok(SubjectSpec::Kinematic(KinematicConfig::default()));
        }
        let text = fs::read_to_string(id_or_path)
            .map_err(|e| invalid("subject", format!("`{id_or_path}` is neither A, B, kinematic nor a readable file: {e}")))?;
        #[derive(Deserialize)]
        struct Wrapped {
            subject: SubjectSpec,
        }
        if let Ok(w) = toml::from_str::<Wrapped>(&text) {
            return Ok(w.subject);
        }
        if let Ok(s) = toml::from_str::<SubjectSpec>(&text) {
            return Ok(s);
        }
        Ok(SubjectSpec::Greybox(SubjectConfig::from_toml(&text)?))
    }

    pub fn id(&self) -> String {
        match self {
            SubjectSpec::Greybox(s) => s.id.clone().unwrap_or_else(|| "custom".into()),
            SubjectSpec::Kinematic(_) => "kinematic".into(),
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        match self.clone() {
            SubjectSpec::Greybox(s) => SubjectSpec::Greybox(s.with_seed(seed)),
            SubjectSpec::Kinematic(mut k) => {
                k.seed = seed;
                SubjectSpec::Kinematic(k)
            }
        }
    }

    pub fn noise_free(&self) -> Self {
        match self.clone() {
            SubjectSpec::Greybox(s) => SubjectSpec::Greybox(s.noise_free()),
            SubjectSpec::Kinematic(mut k) => {
                k.noise_std = 0.0;
                k.noise_mean = 0.0;
                SubjectSpec::Kinematic(k)
            }
        }
    }

    pub fn noise_std(&self) -> f64 {
        match self {
            SubjectSpec::Greybox(s) => s.noise_std,
            SubjectSpec::Kinematic(k) => k.noise_std,
        }
    }

    pub fn build(&self) -> Result<Plant> {
        Ok(match self {
            SubjectSpec::Greybox(s) => Plant::Greybox(s.build()?),
            SubjectSpec::Kinematic(k) => Plant::Kinematic(KinematicSubject::new(
                k.geometry,
                k.task,
                k.profile,
                MotorNoise {
                    mean: k.noise_mean,
                    std_dev: k.noise_std,
                    seed: k.seed,
                },
            )?),
        })
    }

    /// The synergy that maximizes steady-state performance. For the reaching
    /// plant this is the centre of the saturated plateau of the objective.
    pub fn optimum(&self) -> Result<f64> {
        match self {
            SubjectSpec::Greybox(s) => s.map().optimal_synergy(),
            SubjectSpec::Kinematic(k) => {
                let grid: Vec<(f64, f64)> = (0..=1600)
                    .map(|n| {
                        let t = 0.8 + n as f64 * 1e-3;
                        (t, simulate_reach(&k.geometry, &k.task, t, &k.profile).performance())
                    })
                    .collect();
                let best = grid.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
                let top: Vec<f64> = grid.iter().filter(|p| p.1 >= best - 1e-9).map(|p| p.0).collect();
                Ok(0.5 * (top[0] + top[top.len() - 1]))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum Plant {
    Greybox(SimulatedSubject),
    Kinematic(KinematicSubject),
}

impl Plant {
    pub fn step(&mut self, theta: f64) -> f64 {
        match self {
            Plant::Greybox(s) => s.step(theta),
            Plant::Kinematic(k) => k.step(theta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[default]
    Greybox,
    Blackbox,
    Sweep,
    Fixed,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Greybox => "greybox",
            Algorithm::Blackbox => "blackbox",
            Algorithm::Sweep => "sweep",
            Algorithm::Fixed => "fixed",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greybox" => Ok(Algorithm::Greybox),
            "blackbox" => Ok(Algorithm::Blackbox),
            "sweep" => Ok(Algorithm::Sweep),
            "fixed" => Ok(Algorithm::Fixed),
            other => Err(invalid("algorithm", format!("`{other}` is not one of greybox, blackbox, sweep, fixed"))),
        }
    }
}

/// `θ_i = start + i·rate` for `i = 0..iterations`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub start: f64,
    pub rate: f64,
    pub iterations: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            start: 0.8,
            rate: 1.0 / 125.0,
            iterations: 201,
        }
    }
}

impl SweepConfig {
    pub fn theta(&self, i: usize) -> f64 {
        self.start + i as f64 * self.rate
    }
}

/// Converged at the first iteration from which θ̂ stays within `tolerance`
/// of the optimum for `window` iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergenceCriterion {
    pub tolerance: f64,
    pub window: usize,
}

impl Default for ConvergenceCriterion {
    fn default() -> Self {
        Self {
            tolerance: 0.1,
            window: 25,
        }
    }
}

impl ConvergenceCriterion {
    pub fn first_converged(&self, theta_hat: &[f64], theta_star: f64) -> Option<usize> {
        let inside: Vec<bool> = theta_hat.iter().map(|t| (t - theta_star).abs() < self.tolerance).collect();
        let mut run = 0;
        for (i, &ok) in inside.iter().enumerate() {
            run = if ok { run + 1 } else { 0 };
            if run == self.window {
                return Some(i + 1 - self.window);
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Synergy held by the `fixed` algorithm; defaults to the personalizer's θ_0.
    pub fixed_theta: Option<f64>,
    pub subject: SubjectSpec,
    pub personalizer: PersonalizerConfig,
    pub baseline: BaselineConfig,
    pub sweep: SweepConfig,
    pub convergence: ConvergenceCriterion,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Greybox,
            iterations: 150,
            seeds: vec![0],
            output_dir: PathBuf::from("out"),
            fixed_theta: None,
            subject: SubjectSpec::default(),
            personalizer: PersonalizerConfig::default(),
            baseline: BaselineConfig::default(),
            sweep: SweepConfig::default(),
            convergence: ConvergenceCriterion::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| invalid("config", e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.personalizer.validate()?;
        self.baseline.validate()?;
        if self.iterations == 0 {
            return Err(invalid("iterations", "must be positive"));
        }
        if self.algorithm == Algorithm::Greybox && self.iterations < self.personalizer.warmup_iterations {
            return Err(invalid(
                "iterations",
                format!("{} is shorter than the warm-up of {}", self.iterations, self.personalizer.warmup_iterations),
            ));
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "need at least one seed"));
        }
        if let Some(t) = self.fixed_theta {
            if !t.is_finite() {
                return Err(invalid("fixed_theta", "must be finite"));
            }
        }
        if !(self.sweep.rate.is_finite() && self.sweep.start.is_finite() && self.sweep.iterations > 0) {
            return Err(invalid("sweep", "start and rate must be finite, iterations positive"));
        }
        if !(self.convergence.tolerance > 0.0 && self.convergence.window > 0) {
            return Err(invalid("convergence", "tolerance and window must be positive"));
        }
        self.subject.build().map(|_| ())
    }

    /// SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Anything that proposes a synergy and learns from the resulting performance.
#[derive(Debug, Clone)]
pub enum Tuner {
    Greybox(Personalizer),
    Blackbox(BlackBoxEs),
    Sweep { law: SweepConfig, iteration: usize },
    Fixed { theta: f64, iteration: usize },
}

impl Tuner {
    pub fn for_config(config: &ExperimentConfig) -> Result<Self> {
        Ok(match config.algorithm {
            Algorithm::Greybox => Tuner::Greybox(Personalizer::new(config.personalizer.clone())?),
            Algorithm::Blackbox => Tuner::Blackbox(BlackBoxEs::new(config.baseline.clone())?),
            Algorithm::Sweep => Tuner::Sweep { law: config.sweep, iteration: 0 },
            Algorithm::Fixed => Tuner::Fixed {
                theta: config.fixed_theta.unwrap_or(config.personalizer.theta_0),
                iteration: 0,
            },
        })
    }

    pub fn theta(&self) -> f64 {
        match self {
            Tuner::Greybox(p) => p.theta(),
            Tuner::Blackbox(b) => b.theta(),
            Tuner::Sweep { law, iteration } => law.theta(*iteration),
            Tuner::Fixed { theta, .. } => *theta,
        }
    }

    pub fn step(&mut self, performance: f64) -> Result<TraceRow> {
        match self {
            Tuner::Greybox(p) => p.step(performance),
            Tuner::Blackbox(b) => b.step(performance),
            Tuner::Sweep { law, iteration } => {
                let t = law.theta(*iteration);
                *iteration += 1;
                Ok(TraceRow::plain(*iteration - 1, t, t, performance))
            }
            Tuner::Fixed { theta, iteration } => {
                *iteration += 1;
                Ok(TraceRow::plain(*iteration - 1, *theta, *theta, performance))
            }
        }
    }
}

/// One closed-loop episode; the seed drives the subject's variation.
pub fn run_episode(config: &ExperimentConfig, seed: u64) -> Result<EpisodeTrace> {
    config.validate()?;
    let mut plant = config.subject.with_seed(seed).build()?;
    let mut tuner = Tuner::for_config(config)?;
    let n = if config.algorithm == Algorithm::Sweep {
        config.sweep.iterations
    } else {
        config.iterations
    };
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let j = plant.step(tuner.theta());
        rows.push(tuner.step(j)?);
    }
    Ok(EpisodeTrace {
        meta: TraceMeta {
            config_hash: config.hash(),
            seed,
            subject: config.subject.id(),
            algorithm: config.algorithm.to_string(),
        },
        rows,
    })
}

/// The validation sweep `θ_i = 0.8 + i/125`, `i = 0..=200`.
pub fn run_sweep(config: &ExperimentConfig, seed: u64) -> Result<EpisodeTrace> {
    let cfg = ExperimentConfig {
        algorithm: Algorithm::Sweep,
        ..config.clone()
    };
    run_episode(&cfg, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub seed: u64,
    pub convergence_iteration: Option<usize>,
    pub final_theta_median: f64,
    pub final_theta_hat: f64,
    pub success: bool,
    pub mean_final_performance: f64,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn summarize(trace: &EpisodeTrace, theta_star: f64, criterion: &ConvergenceCriterion) -> EpisodeSummary {
    let hats = trace.theta_hat();
    let tail = hats.len().saturating_sub(criterion.window);
    let perf = trace.performance();
    let last = *hats.last().unwrap_or(&f64::NAN);
    EpisodeSummary {
        seed: trace.meta.seed,
        convergence_iteration: criterion.first_converged(&hats, theta_star),
        final_theta_median: median(&mut hats[tail..].to_vec()),
        final_theta_hat: last,
        success: (last - theta_star).abs() < criterion.tolerance,
        mean_final_performance: perf[tail..].iter().sum::<f64>() / (perf.len() - tail) as f64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub subject: String,
    pub algorithm: String,
    pub theta_star: f64,
    pub episodes: Vec<EpisodeSummary>,
    /// Episodes that never converge count as later than any that do; `None`
    /// when the median episode did not converge.
    pub median_convergence: Option<f64>,
    pub convergence_quartiles: Option<(f64, f64)>,
    pub median_final_theta: f64,
    pub success_rate: f64,
    /// Set when an episode failed and the batch stopped short.
    pub error: Option<String>,
}

/// Pure aggregation over finished traces.
pub fn aggregate(traces: &[EpisodeTrace], theta_star: f64, criterion: &ConvergenceCriterion) -> BatchReport {
    let episodes: Vec<EpisodeSummary> = traces.iter().map(|t| summarize(t, theta_star, criterion)).collect();
    let n = episodes.len();
    let conv: Vec<f64> = {
        let mut c: Vec<f64> = episodes
            .iter()
            .map(|e| e.convergence_iteration.map(|i| i as f64).unwrap_or(f64::INFINITY))
            .collect();
        c.sort_by(f64::total_cmp);
        c
    };
    let finite = |v: f64| v.is_finite().then_some(v);
    let (median_convergence, convergence_quartiles) = if n == 0 {
        (None, None)
    } else {
        let q1 = quantile(&conv, 0.25);
        let q3 = quantile(&conv, 0.75);
        (finite(quantile(&conv, 0.5)), finite(q1).zip(finite(q3)))
    };
    let mut finals: Vec<f64> = episodes.iter().map(|e| e.final_theta_median).collect();
    BatchReport {
        subject: traces.first().map(|t| t.meta.subject.clone()).unwrap_or_default(),
        algorithm: traces.first().map(|t| t.meta.algorithm.clone()).unwrap_or_default(),
        theta_star,
        median_final_theta: if n == 0 { f64::NAN } else { median(&mut finals) },
        success_rate: if n == 0 {
            0.0
        } else {
            episodes.iter().filter(|e| e.success).count() as f64 / n as f64
        },
        median_convergence,
        convergence_quartiles,
        episodes,
        error: None,
    }
}

impl BatchReport {
    pub fn text(&self) -> String {
        let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_else(|| "not converged".into());
        let mut s = format!(
            "subject = {}\nalgorithm = {}\ntheta_star = {}\nepisodes = {}\nmedian_convergence = {}\n",
            self.subject,
            self.algorithm,
            self.theta_star,
            self.episodes.len(),
            fmt_opt(self.median_convergence)
        );
        if let Some((q1, q3)) = self.convergence_quartiles {
            s += &format!("convergence_iqr = [{q1}, {q3}]\n");
        }
        s += &format!(
            "median_final_theta = {}\nsuccess_rate = {}\n",
            self.median_final_theta, self.success_rate
        );
        if let Some(e) = &self.error {
            s += &format!("PARTIAL: {e}\n");
        }
        s
    }

    pub fn write_summary_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for e in &self.episodes {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub struct BatchRun {
    pub traces: Vec<EpisodeTrace>,
    pub report: BatchReport,
}

/// Every seed in parallel; aggregation waits for all of them. A failing
/// episode is reported in `report.error` alongside the episodes that did run.
pub fn run_batch(config: &ExperimentConfig) -> Result<BatchRun> {
    config.validate()?;
    let theta_star = config.subject.optimum()?;
    let results: Vec<(u64, Result<EpisodeTrace>)> = config
        .seeds
        .par_iter()
        .map(|&seed| (seed, run_episode(config, seed)))
        .collect();
    let mut traces = Vec::new();
    let mut errors = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(t) => traces.push(t),
            Err(e) => errors.push(format!("seed {seed}: {e}")),
        }
    }
    let mut report = aggregate(&traces, theta_star, &config.convergence);
    if !errors.is_empty() {
        report.error = Some(errors.join("; "));
    }
    Ok(BatchRun { traces, report })
}

const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

/// Per-seed traces, `summary.csv`, `report.txt` and the two plots.
pub fn write_batch(run: &BatchRun, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for t in &run.traces {
        let p = dir.join(format!("{}_{}_seed{}.csv", t.meta.algorithm, t.meta.subject, t.meta.seed));
        t.save(&p)?;
        written.push(p);
    }
    let p = dir.join("summary.csv");
    run.report.write_summary_csv(&p)?;
    written.push(p);
    let p = dir.join("report.txt");
    fs::write(&p, run.report.text())?;
    written.push(p);

    let series = |f: fn(&TraceRow) -> f64| -> Vec<svg::Series> {
        run.traces
            .iter()
            .enumerate()
            .map(|(k, t)| svg::Series {
                label: "",
                points: t.rows.iter().map(|r| (r.iteration as f64, f(r))).collect(),
                colour: PALETTE[k % PALETTE.len()],
                width: 1.0,
            })
            .collect()
    };
    let title = format!("{} on subject {}", run.report.algorithm, run.report.subject);
    let p = dir.join("theta.svg");
    fs::write(
        &p,
        svg::line_chart(&title, "iteration", "synergy estimate", &series(|r| r.theta_hat), &[run.report.theta_star]),
    )?;
    written.push(p);
    let p = dir.join("performance.svg");
    fs::write(&p, svg::line_chart(&title, "iteration", "performance J", &series(|r| r.performance), &[]))?;
    written.push(p);
    Ok(written)
}

/// Loads every trace CSV in a directory, ordered by file name.
pub fn load_traces(dir: &Path) -> Result<Vec<EpisodeTrace>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv") && p.file_name().is_some_and(|n| n != "summary.csv"))
        .collect();
    paths.sort();
    paths.iter().map(|p| EpisodeTrace::load(p)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub first: BatchReport,
    pub second: BatchReport,
}

pub fn compare(
    first: &[EpisodeTrace],
    second: &[EpisodeTrace],
    theta_star: f64,
    criterion: &ConvergenceCriterion,
) -> Comparison {
    Comparison {
        first: aggregate(first, theta_star, criterion),
        second: aggregate(second, theta_star, criterion),
    }
}

impl Comparison {
    pub fn text(&self) -> String {
        let (a, b) = (&self.first, &self.second);
        let verdict = match a.success_rate.partial_cmp(&b.success_rate) {
            Some(std::cmp::Ordering::Greater) => "first set succeeds more often",
            Some(std::cmp::Ordering::Less) => "second set succeeds more often",
            _ => "success rates tie",
        };
        format!(
            "[first]\n{}\n[second]\n{}\n[difference]\nsuccess_rate = {}\nverdict = {verdict}\n",
            a.text(),
            b.text(),
            a.success_rate - b.success_rate
        )
    }
}

/// Reads `theta` and `performance` columns from a CSV. Trace files work too:
/// `theta_applied` and `J` are accepted as aliases, `#` lines are skipped.
pub fn read_theta_performance(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let headers = r.headers()?.clone();
    let find = |names: &[&str]| {
        headers
            .iter()
            .position(|h| names.contains(&h.trim()))
            .ok_or_else(|| invalid("input", format!("{} has no column named {}", path.display(), names.join(" or "))))
    };
    let ti = find(&["theta", "theta_applied"])?;
    let ji = find(&["performance", "J"])?;
    let (mut theta, mut perf) = (Vec::new(), Vec::new());
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| invalid("input", format!("row {}: unreadable number", n + 1)))
        };
        theta.push(parse(ti)?);
        perf.push(parse(ji)?);
    }
    Ok((theta, perf))
}

/// `7`, `1,4,9`, `0..20` (exclusive) or `0..=19`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || invalid("seed", format!("`{text}` is not a seed, list or range"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let (b, inclusive) = match b.strip_prefix('=') {
                Some(b) => (b, true),
                None => (b, false),
            };
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            let end = if inclusive { b + 1 } else { b };
            if end <= a {
                return Err(bad());
            }
            out.extend(a..end);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}
