//! Open- and closed-loop prediction error of a learned model over a look-ahead horizon.

use serde::{Deserialize, Serialize};

use crate::envs::Env;
use crate::error::Result;
use crate::policy::{GaussianPolicy, RolloutModel};
use crate::rng::{self, Stream};

/// States beyond this norm count as a diverged prediction.
pub const DIVERGENCE_NORM: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopMode {
    /// The model replays the world's actions.
    Open,
    /// The policy acts on the model's own states.
    Closed,
}

/// `L(t)` for `t = 0..=T`, averaged over rollouts and members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopProfile {
    pub mode: LoopMode,
    pub errors: Vec<f64>,
    /// First step at which some model rollout diverged; the series stops there.
    pub truncated_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplificationProfile {
    pub open_loop: LoopProfile,
    pub closed_loop: LoopProfile,
}

impl AmplificationProfile {
    /// `t,L_open,L_closed`; missing entries after truncation are empty.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W, config_hash: &str) -> Result<()> {
        writeln!(w, "# config={config_hash}")?;
        writeln!(w, "t,L_open,L_closed")?;
        let n = self.open_loop.errors.len().max(self.closed_loop.errors.len());
        let cell = |v: &[f64], t: usize| v.get(t).map_or(String::new(), |x| format!("{x:e}"));
        for t in 0..n {
            writeln!(w, "{t},{},{}", cell(&self.open_loop.errors, t), cell(&self.closed_loop.errors, t))?;
        }
        Ok(())
    }
}

fn task_distance(env: &Env, a: &[f64], b: &[f64]) -> f64 {
    env.task_coords().iter().map(|&i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
}

/// Mean task-space distance between world and model trajectories from shared
/// start states. Actions are the policy mean; world and model draw from the
/// same random stream, so an exact model gives zero error in both modes.
pub fn amplification_profile(
    env: &Env,
    policy: &GaussianPolicy,
    model: RolloutModel,
    mode: LoopMode,
    horizon: usize,
    n_rollouts: usize,
    seed: u64,
) -> Result<LoopProfile> {
    let mut sums = vec![0.0; horizon + 1];
    let mut counts = vec![0usize; horizon + 1];
    let mut truncated_at: Option<usize> = None;
    for i in 0..n_rollouts {
        let mut start_rng = rng::stream(seed, Stream::Diagnose, 2 * i as u64);
        let s0 = env.reset(&mut start_rng);
        // world trajectory and its actions
        let mut world_rng = rng::stream(seed, Stream::Diagnose, 2 * i as u64 + 1);
        let mut world = vec![s0.clone()];
        let mut actions = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let s = world.last().expect("non-empty");
            let a = env.clip_action(&policy.mean_action(s)?);
            let next = env.step(s, &a, &mut world_rng)?;
            actions.push(a);
            world.push(next);
        }
        for m in 0..model.n_members() {
            let mut model_rng = rng::stream(seed, Stream::Diagnose, 2 * i as u64 + 1);
            let mut s = s0.clone();
            counts[0] += 1;
            for t in 0..horizon {
                let a = match mode {
                    LoopMode::Open => actions[t].clone(),
                    LoopMode::Closed => env.clip_action(&policy.mean_action(&s)?),
                };
                s = model.step(m, env, &s, &a, &mut model_rng)?;
                let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
                if !norm.is_finite() || norm > DIVERGENCE_NORM {
                    truncated_at = Some(truncated_at.map_or(t + 1, |u| u.min(t + 1)));
                    break;
                }
                sums[t + 1] += task_distance(env, &world[t + 1], &s);
                counts[t + 1] += 1;
            }
        }
    }
    let end = truncated_at.unwrap_or(horizon + 1);
    let errors = (0..end).map(|t| if counts[t] > 0 { sums[t] / counts[t] as f64 } else { 0.0 }).collect();
    Ok(LoopProfile { mode, errors, truncated_at })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::DynamicsEnsemble;
    use crate::envs::{collect_rollouts, EnvName};

    #[test]
    fn exact_model_has_zero_error() {
        for name in [EnvName::GridworldGoal, EnvName::PointReacher] {
            let env = Env::with_defaults(name);
            let spec = env.spec();
            let pol = GaussianPolicy::new(spec.state_dim, spec.action_dim, &[8], &mut rng::from_seed(2));
            for mode in [LoopMode::Open, LoopMode::Closed] {
                let p = amplification_profile(&env, &pol, RolloutModel::Exact(&env), mode, 30, 4, 9).unwrap();
                assert_eq!(p.errors.len(), 31);
                assert!(p.errors.iter().all(|&e| e == 0.0));
                assert_eq!(p.truncated_at, None);
            }
        }
    }

    #[test]
    fn learned_model_error_starts_at_zero_and_is_finite() {
        let env = Env::with_defaults(EnvName::PointReacher);
        let spec = env.spec();
        let pol = GaussianPolicy::new(spec.state_dim, spec.action_dim, &[8], &mut rng::from_seed(3));
        let data: Vec<_> = collect_rollouts(&env, &pol, 600, 5).unwrap().into_iter().flat_map(|t| t.transitions).collect();
        let mut ens = DynamicsEnsemble::new(spec.state_dim, spec.action_dim, &[16], 2, 1).unwrap();
        let cfg = crate::dynamics::ModelTrainConfig { epochs: 5, max_steps: 100, ..Default::default() };
        ens.train(&data, &cfg, 2).unwrap();
        let p = amplification_profile(&env, &pol, RolloutModel::Learned(&ens), LoopMode::Open, 20, 3, 1).unwrap();
        assert_eq!(p.errors[0], 0.0);
        assert!(p.errors.iter().all(|e| e.is_finite()));
        let prof = AmplificationProfile { open_loop: p.clone(), closed_loop: p };
        let mut buf = Vec::new();
        prof.write_csv(&mut buf, "abc").unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2 + 21);
    }
}
