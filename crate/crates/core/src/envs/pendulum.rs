use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{EnvSpec, PerturbationKind, Trajectory};
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PendulumConfig {
    pub dt: f64,
    pub gravity: f64,
    pub mass: f64,
    pub length: f64,
    pub max_torque: f64,
    pub max_speed: f64,
    pub horizon: usize,
    /// An episode succeeds when the final angle is within this many radians of upright.
    pub success_angle: f64,
}

impl Default for PendulumConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            gravity: 10.0,
            mass: 1.0,
            length: 1.0,
            max_torque: 2.0,
            max_speed: 8.0,
            horizon: 200,
            success_angle: 0.5,
        }
    }
}

/// Torque-limited swing-up pendulum; `θ = 0` is upright.
///
/// State `(cos θ, sin θ, θ̇)`, action a scalar torque.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pendulum {
    pub config: PendulumConfig,
}

fn angle(state: &[f64]) -> f64 {
    state[1].atan2(state[0])
}

impl Pendulum {
    pub fn new(config: PendulumConfig) -> Self {
        Self { config }
    }

    pub(crate) fn spec(&self) -> EnvSpec {
        let c = &self.config;
        let pi = std::f64::consts::PI;
        EnvSpec {
            name: "pendulum".into(),
            state_dim: 3,
            action_dim: 1,
            horizon: c.horizon,
            reward_bound: pi * pi + 0.1 * c.max_speed.powi(2) + 0.001 * c.max_torque.powi(2),
        }
    }

    pub(crate) fn reset(&self, rng: &mut Rng) -> Vec<f64> {
        let pi = std::f64::consts::PI;
        let th: f64 = rng.gen_range(-pi..pi);
        let thdot: f64 = rng.gen_range(-1.0..1.0);
        vec![th.cos(), th.sin(), thdot]
    }

    pub(crate) fn step(&self, state: &[f64], action: &[f64], _rng: &mut Rng) -> Vec<f64> {
        let c = &self.config;
        let u = action[0].clamp(-c.max_torque, c.max_torque);
        let th = angle(state);
        let thdot = state[2];
        let acc = 3.0 * c.gravity / (2.0 * c.length) * th.sin() + 3.0 / (c.mass * c.length * c.length) * u;
        let new_th = th + thdot * c.dt;
        let new_thdot = (thdot + acc * c.dt).clamp(-c.max_speed, c.max_speed);
        vec![new_th.cos(), new_th.sin(), new_thdot]
    }

    pub(crate) fn reward(&self, state: &[f64], action: &[f64], _next: &[f64]) -> f64 {
        let u = action[0].clamp(-self.config.max_torque, self.config.max_torque);
        let th = angle(state);
        -(th * th + 0.1 * state[2] * state[2] + 0.001 * u * u)
    }

    pub(crate) fn is_terminal(&self, _state: &[f64]) -> bool {
        false
    }

    pub(crate) fn is_success(&self, traj: &Trajectory) -> bool {
        traj.final_state().is_some_and(|s| self.goal_distance(s) < self.config.success_angle)
    }

    pub(crate) fn goal_distance(&self, state: &[f64]) -> f64 {
        angle(state).abs()
    }

    pub(crate) fn project(&self, state: &mut [f64]) {
        let norm = state[0].hypot(state[1]);
        if norm > 1e-12 {
            state[0] /= norm;
            state[1] /= norm;
        } else {
            state[0] = 1.0;
            state[1] = 0.0;
        }
        state[2] = state[2].clamp(-self.config.max_speed, self.config.max_speed);
    }

    pub(crate) fn task_coords(&self) -> Vec<usize> {
        vec![0, 1]
    }

    pub(crate) fn success_threshold(&self) -> f64 {
        self.config.success_angle
    }

    pub(crate) fn perturb(&mut self, kind: PerturbationKind, magnitude: f64) -> Result<()> {
        match kind {
            PerturbationKind::DynamicsShift => {
                self.config.mass *= magnitude;
                Ok(())
            }
            PerturbationKind::GoalShift => {
                Err(Error::UnsupportedPerturbation { env: "pendulum".into(), kind: kind.to_string() })
            }
        }
    }
}
