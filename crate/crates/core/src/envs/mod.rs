//! Desk-scale worlds playing the role of the real environment.
//!
//! Every world is stateless: the state vector is passed in and out explicitly and
//! randomness comes from the caller's stream, so the same stepping code serves
//! real rollouts, exact-model rollouts and diagnostics.

mod gridworld;
mod pendulum;
pub mod records;
mod reacher;
mod rollout;

pub use gridworld::{GridConfig, GridWorld, Region, GRID_MOVES};
pub use pendulum::{Pendulum, PendulumConfig};
pub use reacher::{PointReacher, ReacherConfig};
pub use rollout::{collect_rollouts, rollout_episode, Actor, Trajectory, Transition};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Static description of a world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub name: String,
    pub state_dim: usize,
    pub action_dim: usize,
    /// Maximum episode length.
    pub horizon: usize,
    /// Bound on `|reward|`.
    pub reward_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationKind {
    /// Scales a physical parameter by the magnitude.
    DynamicsShift,
    /// Moves the goal sampler to a disjoint region.
    GoalShift,
}

impl std::fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PerturbationKind::DynamicsShift => write!(f, "dynamics-shift"),
            PerturbationKind::GoalShift => write!(f, "goal-shift"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSchedule {
    /// Applied before the first iteration whose cumulative world samples exceed this.
    pub trigger_samples: usize,
    pub kind: PerturbationKind,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvName {
    GridworldGoal,
    PointReacher,
    Pendulum,
}

impl std::str::FromStr for EnvName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gridworld-goal" => Ok(EnvName::GridworldGoal),
            "point-reacher" => Ok(EnvName::PointReacher),
            "pendulum" => Ok(EnvName::Pendulum),
            other => Err(Error::UnknownEnv(other.to_string())),
        }
    }
}

impl std::fmt::Display for EnvName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EnvName::GridworldGoal => "gridworld-goal",
            EnvName::PointReacher => "point-reacher",
            EnvName::Pendulum => "pendulum",
        };
        f.write_str(s)
    }
}

/// One of the desk worlds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Env {
    GridworldGoal(GridWorld),
    PointReacher(PointReacher),
    Pendulum(Pendulum),
}

macro_rules! dispatch {
    ($self:ident, $w:ident => $e:expr) => {
        match $self {
            Env::GridworldGoal($w) => $e,
            Env::PointReacher($w) => $e,
            Env::Pendulum($w) => $e,
        }
    };
}

/// Builds a world with default parameters.
pub fn make_env(name: &str) -> Result<Env> {
    Ok(Env::with_defaults(name.parse()?))
}

impl Env {
    pub fn with_defaults(name: EnvName) -> Self {
        match name {
            EnvName::GridworldGoal => Env::GridworldGoal(GridWorld::new(GridConfig::default())),
            EnvName::PointReacher => Env::PointReacher(PointReacher::new(ReacherConfig::default())),
            EnvName::Pendulum => Env::Pendulum(Pendulum::new(PendulumConfig::default())),
        }
    }

    pub fn name(&self) -> EnvName {
        match self {
            Env::GridworldGoal(_) => EnvName::GridworldGoal,
            Env::PointReacher(_) => EnvName::PointReacher,
            Env::Pendulum(_) => EnvName::Pendulum,
        }
    }

    pub fn spec(&self) -> EnvSpec {
        dispatch!(self, w => w.spec())
    }

    pub fn horizon(&self) -> usize {
        self.spec().horizon
    }

    /// Samples an initial state (goal included).
    pub fn reset(&self, rng: &mut Rng) -> Vec<f64> {
        dispatch!(self, w => w.reset(rng))
    }

    /// World transition. Fails on a non-finite successor.
    pub fn step(&self, state: &[f64], action: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
        let next = dispatch!(self, w => w.step(state, action, rng));
        crate::error::ensure_finite(&next, "environment state")?;
        Ok(next)
    }

    /// Maps a raw policy output into the admissible action box.
    pub fn clip_action(&self, action: &[f64]) -> Vec<f64> {
        let bound = match self {
            Env::GridworldGoal(_) | Env::PointReacher(_) => 1.0,
            Env::Pendulum(p) => p.config.max_torque,
        };
        action.iter().map(|a| a.clamp(-bound, bound)).collect()
    }

    /// Known reward oracle.
    pub fn reward(&self, state: &[f64], action: &[f64], next_state: &[f64]) -> f64 {
        dispatch!(self, w => w.reward(state, action, next_state))
    }

    pub fn is_terminal(&self, state: &[f64]) -> bool {
        dispatch!(self, w => w.is_terminal(state))
    }

    pub fn is_success(&self, traj: &Trajectory) -> bool {
        dispatch!(self, w => w.is_success(traj))
    }

    /// Task distance of a state to its goal.
    pub fn goal_distance(&self, state: &[f64]) -> f64 {
        dispatch!(self, w => w.goal_distance(state))
    }

    /// Snaps a model-predicted state onto the world's state manifold.
    pub fn project(&self, state: &mut [f64]) {
        dispatch!(self, w => w.project(state))
    }

    /// Coordinates used for multi-step prediction error.
    pub fn task_coords(&self) -> Vec<usize> {
        dispatch!(self, w => w.task_coords())
    }

    pub fn success_threshold(&self) -> f64 {
        dispatch!(self, w => w.success_threshold())
    }

    /// Applies a perturbation in place.
    pub fn perturb(&mut self, kind: PerturbationKind, magnitude: f64) -> Result<()> {
        if !(magnitude.is_finite() && magnitude > 0.0) {
            return Err(Error::InvalidInput(format!("perturbation magnitude {magnitude} must be positive")));
        }
        dispatch!(self, w => w.perturb(kind, magnitude))
    }

    pub fn as_grid(&self) -> Option<&GridWorld> {
        match self {
            Env::GridworldGoal(g) => Some(g),
            _ => None,
        }
    }
}

/// Functional form of `perturb`.
pub fn apply_perturbation(env: &Env, schedule: &PerturbationSchedule) -> Result<Env> {
    let mut out = env.clone();
    out.perturb(schedule.kind, schedule.magnitude)?;
    Ok(out)
}
