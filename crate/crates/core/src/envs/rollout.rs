use serde::{Deserialize, Serialize};

use super::Env;
use crate::error::{Error, Result};
use crate::rng::{self, Rng, Stream};

/// Anything that maps a state to an action, possibly stochastically.
pub trait Actor {
    fn act(&self, state: &[f64], rng: &mut Rng) -> Vec<f64>;
}

impl<F> Actor for F
where
    F: Fn(&[f64], &mut Rng) -> Vec<f64>,
{
    fn act(&self, state: &[f64], rng: &mut Rng) -> Vec<f64> {
        self(state, rng)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub t: usize,
    pub state: Vec<f64>,
    /// The action as executed by the world (after clipping).
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    /// True termination only; horizon truncation leaves this false.
    pub done: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub transitions: Vec<Transition>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Visited states, including the last successor.
    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.transitions
            .iter()
            .map(|t| t.state.as_slice())
            .chain(self.transitions.last().map(|t| t.next_state.as_slice()))
    }

    pub fn final_state(&self) -> Option<&[f64]> {
        self.transitions.last().map(|t| t.next_state.as_slice())
    }

    pub fn total_reward(&self) -> f64 {
        self.transitions.iter().map(|t| t.reward).sum()
    }

    pub fn discounted_return(&self, gamma: f64) -> f64 {
        self.transitions.iter().rev().fold(0.0, |acc, t| t.reward + gamma * acc)
    }
}

/// Runs one episode of at most `max_len` steps (capped by the horizon).
pub fn rollout_episode(env: &Env, actor: &dyn Actor, max_len: usize, rng: &mut Rng) -> Result<Trajectory> {
    let len = max_len.min(env.horizon());
    let mut state = env.reset(rng);
    let mut traj = Trajectory { transitions: Vec::with_capacity(len) };
    for t in 0..len {
        let raw = actor.act(&state, rng);
        crate::error::ensure_finite(&raw, "policy action")?;
        let action = env.clip_action(&raw);
        let next_state = env.step(&state, &action, rng)?;
        let reward = env.reward(&state, &action, &next_state);
        let done = env.is_terminal(&next_state);
        traj.transitions.push(Transition { t, state, action, reward, next_state: next_state.clone(), done });
        if done {
            break;
        }
        state = next_state;
    }
    Ok(traj)
}

/// Collects exactly `n_samples` world transitions; the last episode may be cut short.
///
/// Episode `i` draws from its own stream of `seed`, so the result is reproducible.
pub fn collect_rollouts(env: &Env, actor: &dyn Actor, n_samples: usize, seed: u64) -> Result<Vec<Trajectory>> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("n_samples must be at least 1".into()));
    }
    let mut out = Vec::new();
    let mut remaining = n_samples;
    let mut i = 0;
    while remaining > 0 {
        let mut r = rng::stream(seed, Stream::WorldData, i);
        let traj = rollout_episode(env, actor, remaining, &mut r)?;
        remaining -= traj.len();
        out.push(traj);
        i += 1;
    }
    Ok(out)
}
