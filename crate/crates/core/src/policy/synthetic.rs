use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GaussianPolicy;
use crate::dynamics::DynamicsEnsemble;
use crate::envs::Env;
use crate::error::Result;
use crate::rng::{self, Rng, Stream};

/// What synthetic rollouts are simulated in.
#[derive(Debug, Clone, Copy)]
pub enum RolloutModel<'a> {
    Learned(&'a DynamicsEnsemble),
    /// The world's own stochastic stepper, standing in for a perfect model.
    Exact(&'a Env),
}

impl RolloutModel<'_> {
    pub fn n_members(&self) -> usize {
        match self {
            RolloutModel::Learned(e) => e.n_members(),
            RolloutModel::Exact(_) => 1,
        }
    }

    /// One step under `member`; predictions are projected onto the world's state set.
    pub fn step(&self, member: usize, env: &Env, state: &[f64], action: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
        match self {
            RolloutModel::Learned(e) => {
                let mut next = e.predict(member, state, action)?;
                if next.iter().all(|v| v.is_finite()) {
                    env.project(&mut next);
                }
                Ok(next)
            }
            RolloutModel::Exact(w) => w.step(state, action, rng),
        }
    }
}

/// A model rollout. `actions` are the raw policy samples (before clipping).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTrajectory {
    pub member: usize,
    /// `len() + 1` states; the last is the bootstrap successor.
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    /// The last step reached a terminal state.
    pub terminated: bool,
    /// Cut short by a non-finite model prediction.
    pub diverged: bool,
}

impl SyntheticTrajectory {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    pub fn dones(&self) -> Vec<bool> {
        let mut d = vec![false; self.len()];
        if self.terminated {
            if let Some(last) = d.last_mut() {
                *last = true;
            }
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutSpec {
    pub n_starts: usize,
    pub horizon: usize,
    /// Share of starts drawn from recorded world states instead of the initial distribution.
    pub intermediate_fraction: f64,
    /// Act with the policy mean instead of sampling.
    pub deterministic: bool,
}

/// Rolls `n_starts` start states under every model member.
///
/// Start `j` and its member rollouts use streams derived from `(seed, j)` only, so the
/// output does not depend on scheduling.
pub fn synthetic_rollouts(
    policy: &GaussianPolicy,
    model: RolloutModel<'_>,
    env: &Env,
    intermediate_states: &[Vec<f64>],
    spec: &RolloutSpec,
    seed: u64,
) -> Result<Vec<SyntheticTrajectory>> {
    let k = model.n_members();
    let n_intermediate = if intermediate_states.is_empty() {
        0
    } else {
        (spec.n_starts as f64 * spec.intermediate_fraction).round() as usize
    };
    let stride = k as u64 + 1;
    let starts: Vec<Vec<f64>> = (0..spec.n_starts)
        .map(|j| {
            let mut r = rng::stream(seed, Stream::Synthetic, j as u64 * stride);
            if j < n_intermediate {
                intermediate_states[r.gen_range(0..intermediate_states.len())].clone()
            } else {
                env.reset(&mut r)
            }
        })
        .collect();
    let jobs: Vec<(usize, usize)> = (0..spec.n_starts).flat_map(|j| (0..k).map(move |m| (j, m))).collect();
    jobs.par_iter()
        .map(|&(j, m)| {
            let mut r = rng::stream(seed, Stream::Synthetic, j as u64 * stride + 1 + m as u64);
            rollout_one(policy, model, env, starts[j].clone(), m, spec, &mut r)
        })
        .collect()
}

fn rollout_one(
    policy: &GaussianPolicy,
    model: RolloutModel<'_>,
    env: &Env,
    start: Vec<f64>,
    member: usize,
    spec: &RolloutSpec,
    rng: &mut Rng,
) -> Result<SyntheticTrajectory> {
    let mut traj = SyntheticTrajectory {
        member,
        states: vec![start],
        actions: Vec::new(),
        rewards: Vec::new(),
        terminated: false,
        diverged: false,
    };
    for _ in 0..spec.horizon {
        let s = traj.states.last().expect("start state present");
        let raw = if spec.deterministic { policy.mean_action(s)? } else { policy.sample(s, rng)? };
        let a = env.clip_action(&raw);
        let next = model.step(member, env, s, &a, rng)?;
        if next.iter().any(|v| !v.is_finite()) {
            traj.diverged = true;
            break;
        }
        let r = env.reward(s, &a, &next);
        let done = env.is_terminal(&next);
        traj.actions.push(raw);
        traj.rewards.push(r);
        traj.states.push(next);
        if done {
            traj.terminated = true;
            break;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::make_env;

    fn spec(n: usize, h: usize) -> RolloutSpec {
        RolloutSpec { n_starts: n, horizon: h, intermediate_fraction: 0.0, deterministic: false }
    }

    #[test]
    fn counts_and_horizon_one() {
        let env = make_env("point-reacher").unwrap();
        let p = GaussianPolicy::new(6, 2, &[8], &mut rng::from_seed(0));
        let e = DynamicsEnsemble::new(6, 2, &[8], 3, 0).unwrap();
        let mut e = e;
        let data = crate::envs::collect_rollouts(&env, &p, 200, 1).unwrap();
        let flat: Vec<_> = data.iter().flat_map(|t| t.transitions.clone()).collect();
        e.train(&flat, &crate::dynamics::ModelTrainConfig { epochs: 1, ..Default::default() }, 0).unwrap();
        let trajs = synthetic_rollouts(&p, RolloutModel::Learned(&e), &env, &[], &spec(7, 1), 3).unwrap();
        assert_eq!(trajs.len(), 21);
        assert!(trajs.iter().all(|t| t.len() == 1 && t.states.len() == 2));
        // members of one start share the start state
        assert_eq!(trajs[0].states[0], trajs[2].states[0]);
        assert_ne!(trajs[0].states[0], trajs[3].states[0]);
    }

    #[test]
    fn deterministic_policy_and_model_repeat() {
        let env = make_env("point-reacher").unwrap();
        let p = GaussianPolicy::new(6, 2, &[8], &mut rng::from_seed(0));
        let s = RolloutSpec { deterministic: true, ..spec(4, 10) };
        let a = synthetic_rollouts(&p, RolloutModel::Exact(&env), &env, &[], &s, 9).unwrap();
        let b = synthetic_rollouts(&p, RolloutModel::Exact(&env), &env, &[], &s, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn intermediate_starts_come_from_buffer() {
        let env = make_env("point-reacher").unwrap();
        let p = GaussianPolicy::new(6, 2, &[8], &mut rng::from_seed(0));
        let marker = vec![vec![1.5, 1.5, 0.0, 0.0, 0.3, 0.0]];
        let s = RolloutSpec { intermediate_fraction: 0.5, ..spec(10, 2) };
        let trajs = synthetic_rollouts(&p, RolloutModel::Exact(&env), &env, &marker, &s, 1).unwrap();
        let hits = trajs.iter().filter(|t| t.states[0] == marker[0]).count();
        assert_eq!(hits, 5);
    }
}
