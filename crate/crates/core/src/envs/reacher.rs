use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{EnvSpec, PerturbationKind, Trajectory};
use crate::error::Result;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReacherConfig {
    pub dt: f64,
    pub mass: f64,
    pub horizon: usize,
    /// Positions are clamped to `[-bound, bound]`; hitting a wall zeroes that velocity.
    pub bound: f64,
    pub success_radius: f64,
    /// Goal x-range; a goal shift mirrors it through zero.
    pub goal_x: (f64, f64),
    pub goal_y: (f64, f64),
    /// Half-width of the uniform initial position box.
    pub init_spread: f64,
}

impl Default for ReacherConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            mass: 1.0,
            horizon: 100,
            bound: 2.0,
            success_radius: 0.05,
            goal_x: (0.1, 0.5),
            goal_y: (-0.5, 0.5),
            init_spread: 0.1,
        }
    }
}

/// Planar point mass pushed toward a goal.
///
/// State `(px, py, vx, vy, gx, gy)`, action a force in `[-1, 1]^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReacher {
    pub config: ReacherConfig,
}

impl PointReacher {
    pub fn new(config: ReacherConfig) -> Self {
        Self { config }
    }

    pub(crate) fn spec(&self) -> EnvSpec {
        let b = self.config.bound;
        let gx = self.config.goal_x.0.abs().max(self.config.goal_x.1.abs());
        let gy = self.config.goal_y.0.abs().max(self.config.goal_y.1.abs());
        EnvSpec {
            name: "point-reacher".into(),
            state_dim: 6,
            action_dim: 2,
            horizon: self.config.horizon,
            reward_bound: ((b + gx).powi(2) + (b + gy).powi(2)).sqrt(),
        }
    }

    fn sample(rng: &mut Rng, range: (f64, f64)) -> f64 {
        if range.1 > range.0 {
            rng.gen_range(range.0..range.1)
        } else {
            range.0
        }
    }

    pub(crate) fn reset(&self, rng: &mut Rng) -> Vec<f64> {
        let c = &self.config;
        let w = c.init_spread;
        let px = Self::sample(rng, (-w, w));
        let py = Self::sample(rng, (-w, w));
        let gx = Self::sample(rng, c.goal_x);
        let gy = Self::sample(rng, c.goal_y);
        vec![px, py, 0.0, 0.0, gx, gy]
    }

    pub(crate) fn step(&self, state: &[f64], action: &[f64], _rng: &mut Rng) -> Vec<f64> {
        let c = &self.config;
        let mut next = state.to_vec();
        for i in 0..2 {
            let force = action[i].clamp(-1.0, 1.0);
            let mut pos = state[i] + c.dt * state[i + 2];
            let mut vel = state[i + 2] + c.dt * force / c.mass;
            if pos.abs() > c.bound {
                pos = pos.clamp(-c.bound, c.bound);
                vel = 0.0;
            }
            next[i] = pos;
            next[i + 2] = vel;
        }
        next
    }

    pub(crate) fn reward(&self, state: &[f64], _action: &[f64], _next: &[f64]) -> f64 {
        -self.goal_distance(state)
    }

    pub(crate) fn is_terminal(&self, _state: &[f64]) -> bool {
        false
    }

    pub(crate) fn is_success(&self, traj: &Trajectory) -> bool {
        traj.final_state().is_some_and(|s| self.goal_distance(s) < self.config.success_radius)
    }

    pub(crate) fn goal_distance(&self, state: &[f64]) -> f64 {
        ((state[0] - state[4]).powi(2) + (state[1] - state[5]).powi(2)).sqrt()
    }

    pub(crate) fn project(&self, state: &mut [f64]) {
        let b = self.config.bound;
        state[0] = state[0].clamp(-b, b);
        state[1] = state[1].clamp(-b, b);
    }

    pub(crate) fn task_coords(&self) -> Vec<usize> {
        vec![0, 1]
    }

    pub(crate) fn success_threshold(&self) -> f64 {
        self.config.success_radius
    }

    pub(crate) fn perturb(&mut self, kind: PerturbationKind, magnitude: f64) -> Result<()> {
        match kind {
            PerturbationKind::DynamicsShift => self.config.mass *= magnitude,
            PerturbationKind::GoalShift => {
                let (lo, hi) = self.config.goal_x;
                self.config.goal_x = (-hi, -lo);
            }
        }
        Ok(())
    }
}
