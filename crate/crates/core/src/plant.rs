//! Planar two-link reaching plant. The shoulder follows a prescribed profile,
//! the elbow is slaved to it through the synergy `q̇_p = θ·q̇_r`, and each
//! reach is scored by the end-point error / completion-time objective.
//!
//! Angles are measured from the downward vertical, positive forward; `x` points
//! forward and `y` up, both in cm.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{MotorNoise, NoiseSampler};

/// Error normalizer `p̃_fmax` in cm.
pub const MAX_END_ERROR: f64 = 10.0;
/// Time normalizer `t_fmax` in s.
pub const MAX_COMPLETION_TIME: f64 = 3.0;
/// Hand speed below which a moving hand counts as stopped, cm/s.
pub const STOP_SPEED: f64 = 1.0;

type Vec2 = [f64; 2];

fn dist(a: Vec2, b: Vec2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmGeometry {
    pub upper_arm_length: f64,
    pub forearm_plus_hand_length: f64,
    pub shoulder_position: Vec2,
}

impl Default for ArmGeometry {
    fn default() -> Self {
        Self {
            upper_arm_length: 30.0,
            forearm_plus_hand_length: 35.0,
            shoulder_position: [0.0, 0.0],
        }
    }
}

impl ArmGeometry {
    pub fn new(upper: f64, forearm: f64, shoulder: Vec2) -> Result<Self> {
        let g = Self {
            upper_arm_length: upper,
            forearm_plus_hand_length: forearm,
            shoulder_position: shoulder,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.upper_arm_length > 0.0 && self.upper_arm_length.is_finite()) {
            return Err(invalid("upper_arm_length", "must be positive"));
        }
        if !(self.forearm_plus_hand_length > 0.0 && self.forearm_plus_hand_length.is_finite()) {
            return Err(invalid("forearm_plus_hand_length", "must be positive"));
        }
        if !self.shoulder_position.iter().all(|v| v.is_finite()) {
            return Err(invalid("shoulder_position", "must be finite"));
        }
        Ok(())
    }

    pub fn elbow(&self, q_r: f64) -> Vec2 {
        let [sx, sy] = self.shoulder_position;
        [sx + self.upper_arm_length * q_r.sin(), sy - self.upper_arm_length * q_r.cos()]
    }

    /// Hand position for shoulder flexion `q_r` and elbow flexion `q_p`.
    pub fn hand(&self, q_r: f64, q_p: f64) -> Vec2 {
        let [ex, ey] = self.elbow(q_r);
        let a = q_r + q_p;
        [ex + self.forearm_plus_hand_length * a.sin(), ey - self.forearm_plus_hand_length * a.cos()]
    }

    /// Flexed-elbow inverse kinematics. Out-of-reach points are projected onto
    /// the workspace boundary.
    pub fn inverse(&self, p: Vec2) -> (f64, f64) {
        let (l1, l2) = (self.upper_arm_length, self.forearm_plus_hand_length);
        let x = p[0] - self.shoulder_position[0];
        let y = p[1] - self.shoulder_position[1];
        let r2 = x * x + y * y;
        let c = ((r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)).clamp(-1.0, 1.0);
        let q_p = c.acos();
        let q_r = x.atan2(-y) - (l2 * q_p.sin()).atan2(l1 + l2 * q_p.cos());
        (q_r, q_p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReachTask {
    pub start_target: Vec2,
    pub end_target: Vec2,
    pub time_limit: f64,
    pub success_radius: f64,
}

impl Default for ReachTask {
    fn default() -> Self {
        // 23 cm straight up, in front of the shoulder
        Self {
            start_target: [38.0, -30.0],
            end_target: [38.0, -7.0],
            time_limit: 3.0,
            success_radius: 5.0,
        }
    }
}

impl ReachTask {
    pub fn validate(&self) -> Result<()> {
        if !self.start_target.iter().chain(&self.end_target).all(|v| v.is_finite()) {
            return Err(invalid("targets", "must be finite"));
        }
        if !(self.time_limit > 0.0 && self.time_limit.is_finite()) {
            return Err(invalid("time_limit", "must be positive"));
        }
        if !(self.success_radius > 0.0) {
            return Err(invalid("success_radius", "must be positive"));
        }
        Ok(())
    }

    pub fn separation(&self) -> f64 {
        dist(self.start_target, self.end_target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    #[default]
    MinimumJerk,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShoulderProfile {
    pub kind: ProfileKind,
    pub peak_flexion: f64,
    pub duration: f64,
    pub sample_rate: f64,
}

impl Default for ShoulderProfile {
    fn default() -> Self {
        Self::for_task(&ArmGeometry::default(), &ReachTask::default())
    }
}

impl ShoulderProfile {
    /// Shoulder excursion that carries the arm from the start to the end
    /// target when the elbow is positioned by inverse kinematics.
    pub fn for_task(geometry: &ArmGeometry, task: &ReachTask) -> Self {
        let (q0, _) = geometry.inverse(task.start_target);
        let (q1, _) = geometry.inverse(task.end_target);
        Self {
            kind: ProfileKind::MinimumJerk,
            peak_flexion: q1 - q0,
            duration: 1.0,
            sample_rate: 90.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(invalid("duration", "must be positive"));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(invalid("sample_rate", "must be positive"));
        }
        if !self.peak_flexion.is_finite() {
            return Err(invalid("peak_flexion", "must be finite"));
        }
        Ok(())
    }

    /// Flexion relative to the start posture at time `t`.
    pub fn flexion(&self, t: f64) -> f64 {
        let tau = (t / self.duration).clamp(0.0, 1.0);
        let s = match self.kind {
            ProfileKind::MinimumJerk => tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau),
            ProfileKind::Linear => tau,
        };
        self.peak_flexion * s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachOutcome {
    pub end_error: f64,
    pub completion_time: f64,
    pub completed: bool,
    /// `(t, hand position)` up to the stop instant.
    pub hand_path: Vec<(f64, Vec2)>,
}

impl ReachOutcome {
    pub fn performance(&self) -> f64 {
        objective(self.end_error, self.completion_time)
    }

    pub fn write_hand_path<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "y"])?;
        for (t, [x, y]) in &self.hand_path {
            w.write_record([t.to_string(), x.to_string(), y.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Task score for end-point error (cm) and completion time (s). Each term
/// saturates near 100.
pub fn objective(end_error: f64, completion_time: f64) -> f64 {
    let e2 = end_error * end_error;
    0.25 * MAX_END_ERROR * MAX_END_ERROR / e2.max(0.25) + 16.67 * MAX_COMPLETION_TIME / completion_time.max(0.5)
}

pub fn simulate_reach(geometry: &ArmGeometry, task: &ReachTask, theta: f64, profile: &ShoulderProfile) -> ReachOutcome {
    let (q_r0, q_p0) = geometry.inverse(task.start_target);
    let dt = 1.0 / profile.sample_rate;
    let steps = (task.time_limit * profile.sample_rate).round() as usize;
    let hand_at = |t: f64| {
        let dq = profile.flexion(t);
        geometry.hand(q_r0 + dq, q_p0 + theta * dq)
    };

    let mut path = vec![(0.0, hand_at(0.0))];
    let mut moving = false;
    let mut stop = None;
    for k in 1..=steps {
        let t = k as f64 * dt;
        let p = hand_at(t);
        let speed = dist(p, path[k - 1].1) / dt;
        path.push((t, p));
        if speed >= STOP_SPEED {
            moving = true;
        } else if moving {
            stop = Some(k);
            break;
        }
    }
    let k_stop = stop.unwrap_or(path.len() - 1);
    path.truncate(k_stop + 1);
    let (t_end, p_end) = path[k_stop];
    let completion_time = if stop.is_some() { t_end } else { task.time_limit };
    let end_error = dist(p_end, task.end_target);
    ReachOutcome {
        end_error,
        completion_time,
        completed: end_error <= task.success_radius && completion_time <= task.time_limit,
        hand_path: path,
    }
}

/// The reaching plant scored by the task objective, with optional additive
/// Gaussian variation, usable in place of a grey-box subject.
#[derive(Debug, Clone)]
pub struct KinematicSubject {
    pub geometry: ArmGeometry,
    pub task: ReachTask,
    pub profile: ShoulderProfile,
    sampler: NoiseSampler,
}

impl KinematicSubject {
    pub fn new(geometry: ArmGeometry, task: ReachTask, profile: ShoulderProfile, noise: MotorNoise) -> Result<Self> {
        geometry.validate()?;
        task.validate()?;
        profile.validate()?;
        Ok(Self {
            geometry,
            task,
            profile,
            sampler: noise.sampler()?,
        })
    }

    pub fn step(&mut self, theta: f64) -> f64 {
        simulate_reach(&self.geometry, &self.task, theta, &self.profile).performance() + self.sampler.sample()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> (ArmGeometry, ReachTask, ShoulderProfile) {
        (ArmGeometry::default(), ReachTask::default(), ShoulderProfile::default())
    }

    #[test]
    fn objective_corners() {
        assert!((objective(0.4, 0.4) - 200.02).abs() < 1e-9);
        assert!((objective(10.0, 3.0) - 16.92).abs() < 1e-9);
        assert!((objective(1.0, 1.0) - 75.01).abs() < 1e-9);
    }

    #[test]
    fn targets_are_23_cm_apart() {
        assert!((ReachTask::default().separation() - 23.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_kinematics_round_trip() {
        let g = ArmGeometry::default();
        for p in [[38.0, -30.0], [38.0, -7.0], [10.0, -50.0], [-5.0, -40.0]] {
            let (qr, qp) = g.inverse(p);
            assert!(dist(g.hand(qr, qp), p) < 1e-9);
            assert!(qp >= 0.0);
        }
    }

    #[test]
    fn still_arm_never_arrives() {
        let (g, t, mut p) = defaults();
        p.peak_flexion = 0.0;
        let out = simulate_reach(&g, &t, 1.5, &p);
        assert_eq!(out.completion_time, t.time_limit);
        assert!((out.end_error - 23.0).abs() < 1e-9);
        assert!(!out.completed);
    }

    #[test]
    fn zero_synergy_sweeps_an_arc() {
        let (g, t, p) = defaults();
        let out = simulate_reach(&g, &t, 0.0, &p);
        let (qr0, qp0) = g.inverse(t.start_target);
        let radius = dist(g.hand(qr0, qp0), g.shoulder_position);
        for (_, h) in &out.hand_path {
            assert!((dist(*h, g.shoulder_position) - radius).abs() < 1e-9);
        }
        let dq = p.flexion(out.completion_time);
        let expect = dist(g.hand(qr0 + dq, qp0), t.end_target);
        assert!((out.end_error - expect).abs() < 1e-9);
    }

    #[test]
    fn interior_minimum_of_end_error() {
        let (g, t, p) = defaults();
        let errs: Vec<f64> = (0..=160)
            .map(|k| simulate_reach(&g, &t, 0.8 + k as f64 * 0.01, &p).end_error)
            .collect();
        let (kmin, _) = errs.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        assert!(kmin > 0 && kmin < 160, "minimum at grid index {kmin}");
        // continuity: neighbouring grid points never jump by more than a few mm
        assert!(errs.windows(2).all(|w| (w[1] - w[0]).abs() < 0.6));
        // the geometric optimum is the ratio of joint excursions
        let (qr0, qp0) = g.inverse(t.start_target);
        let (qr1, qp1) = g.inverse(t.end_target);
        let ratio = (qp1 - qp0) / (qr1 - qr0);
        assert!((0.8 + kmin as f64 * 0.01 - ratio).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn deterministic() {
        let (g, t, p) = defaults();
        assert_eq!(simulate_reach(&g, &t, 1.37, &p), simulate_reach(&g, &t, 1.37, &p));
    }

    #[test]
    fn hand_path_csv() {
        let (g, t, p) = defaults();
        let out = simulate_reach(&g, &t, 1.6, &p);
        let mut buf = Vec::new();
        out.write_hand_path(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x,y\n"));
        assert_eq!(text.lines().count(), out.hand_path.len() + 1);
    }
}
