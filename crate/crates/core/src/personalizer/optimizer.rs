use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::SynergyBounds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Newton,
    Gradient,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Newton => "newton",
            Branch::Gradient => "gradient",
        })
    }
}

impl FromStr for Branch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "newton" => Ok(Branch::Newton),
            "gradient" => Ok(Branch::Gradient),
            other => Err(format!("unknown branch `{other}`")),
        }
    }
}

/// Switched Newton / gradient ascent on θ̂ with projection onto the bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub theta_hat: f64,
    pub k: f64,
    pub epsilon: f64,
    pub omega_o: f64,
    pub bounds: SynergyBounds,
    pub last_branch: Option<Branch>,
}

impl OptimizerState {
    /// Newton direction when the curvature is confidently negative relative
    /// to the slope, plain gradient otherwise.
    pub fn direction(grad: f64, curv: f64, epsilon: f64) -> (f64, Branch) {
        if grad.abs() < -epsilon * curv {
            (-grad / curv, Branch::Newton)
        } else {
            (grad, Branch::Gradient)
        }
    }

    pub fn step(&mut self, grad: f64, curv: f64) -> Branch {
        let (delta, branch) = Self::direction(grad, curv, self.epsilon);
        self.theta_hat = self.bounds.clamp(self.theta_hat + self.k * self.omega_o * delta);
        self.last_branch = Some(branch);
        branch
    }
}
