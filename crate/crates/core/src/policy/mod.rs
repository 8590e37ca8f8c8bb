//! The policy player: Gaussian policies improved by normalized natural policy gradient
//! on rollouts simulated in a learned (or exact) model.

mod gae;
mod gaussian;
mod npg;
mod synthetic;
mod value;

pub use gae::{gae_advantages, standardize};
pub use gaussian::{GaussianPolicy, MeanActor, INIT_LOG_STD};
pub use npg::{conjugate_gradient, normalized_step, policy_gradient, CgResult, FisherOperator, NpgStep};
pub use synthetic::{synthetic_rollouts, RolloutModel, RolloutSpec, SyntheticTrajectory};
pub use value::{explained_variance, ValueFitConfig, ValueFitReport, ValueNet};

use serde::{Deserialize, Serialize};

use crate::envs::Env;
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// How trajectories from different ensemble members enter the gradient.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleMode {
    /// All members' rollouts are pooled into one batch.
    #[default]
    Pooled,
    /// Only the member with the lowest mean return is used.
    WorstCase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NpgConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    /// Number of rollout start states `N_tau`.
    pub n_traj: usize,
    /// Rollouts last `min(env horizon, max_horizon)` steps unless they terminate.
    pub max_horizon: usize,
    /// Normalized step size `delta`.
    pub step_size: f64,
    pub cg_iters: usize,
    pub cg_damping: f64,
    pub intermediate_fraction: f64,
    /// Cap on the number of states the Fisher operator averages over.
    pub fisher_states: Option<usize>,
    pub standardize_advantages: bool,
    pub ensemble_mode: EnsembleMode,
    pub value: ValueFitConfig,
}

impl Default for NpgConfig {
    fn default() -> Self {
        Self {
            gamma: 0.995,
            gae_lambda: 0.97,
            n_traj: 200,
            max_horizon: 500,
            step_size: 0.05,
            cg_iters: 10,
            cg_damping: 1e-4,
            intermediate_fraction: 0.5,
            fisher_states: None,
            standardize_advantages: true,
            ensemble_mode: EnsembleMode::Pooled,
            value: ValueFitConfig::default(),
        }
    }
}

impl NpgConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: &str| Err(Error::Config { field: format!("npg.{field}"), message: message.into() });
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma", "must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda", "must lie in [0, 1]");
        }
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return bad("step_size", "must be non-negative");
        }
        if self.n_traj == 0 {
            return bad("n_traj", "must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.intermediate_fraction) {
            return bad("intermediate_fraction", "must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Scalars describing one NPG update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpgStats {
    /// Mean undiscounted return of the synthetic trajectories used.
    pub synthetic_return: f64,
    pub n_samples: usize,
    pub divergences: usize,
    pub kl: f64,
    pub quad_form: f64,
    pub fallback: bool,
    pub skipped: bool,
    pub explained_variance: f64,
}

/// One model-based NPG update: simulate, estimate advantages, take a normalized
/// natural gradient step, refit the baseline.
pub fn npg_iteration(
    policy: &mut GaussianPolicy,
    value: &mut ValueNet,
    model: RolloutModel<'_>,
    env: &Env,
    intermediate_states: &[Vec<f64>],
    cfg: &NpgConfig,
    seed: u64,
) -> Result<NpgStats> {
    let spec = RolloutSpec {
        n_starts: cfg.n_traj,
        horizon: env.horizon().min(cfg.max_horizon),
        intermediate_fraction: cfg.intermediate_fraction,
        deterministic: false,
    };
    let mut trajs = synthetic_rollouts(policy, model, env, intermediate_states, &spec, seed)?;
    let divergences = trajs.iter().filter(|t| t.diverged).count();
    if cfg.ensemble_mode == EnsembleMode::WorstCase && model.n_members() > 1 {
        let k = model.n_members();
        let mut sums = vec![(0.0, 0usize); k];
        for t in &trajs {
            sums[t.member].0 += t.total_reward();
            sums[t.member].1 += 1;
        }
        let worst = (0..k)
            .min_by(|&a, &b| {
                let ma = sums[a].0 / sums[a].1.max(1) as f64;
                let mb = sums[b].0 / sums[b].1.max(1) as f64;
                ma.total_cmp(&mb)
            })
            .expect("at least one member");
        trajs.retain(|t| t.member == worst);
    }
    trajs.retain(|t| !t.is_empty());
    if trajs.is_empty() {
        return Err(Error::NonFinite("every synthetic rollout diverged on its first step".into()));
    }

    let mut states = Vec::new();
    let mut actions = Vec::new();
    let mut advantages = Vec::new();
    let mut targets = Vec::new();
    for t in &trajs {
        let values: Vec<f64> = t.states.iter().map(|s| value.predict(s)).collect::<Result<_>>()?;
        let (adv, tg) = gae_advantages(&t.rewards, &values, &t.dones(), cfg.gamma, cfg.gae_lambda);
        states.extend(t.states[..t.len()].iter().cloned());
        actions.extend(t.actions.iter().cloned());
        advantages.extend(adv);
        targets.extend(tg);
    }
    let synthetic_return = trajs.iter().map(|t| t.total_reward()).sum::<f64>() / trajs.len() as f64;
    if cfg.standardize_advantages {
        standardize(&mut advantages);
    }
    let g = policy_gradient(policy, &states, &actions, &advantages)?;

    let fisher_states: Vec<Vec<f64>> = match cfg.fisher_states {
        Some(cap) if cap > 0 && cap < states.len() => {
            let stride = states.len() as f64 / cap as f64;
            (0..cap).map(|i| states[(i as f64 * stride) as usize].clone()).collect()
        }
        _ => states.clone(),
    };
    let old = policy.clone();
    let step = {
        let op = FisherOperator::new(&old, &fisher_states, cfg.cg_damping)?;
        normalized_step(&g, |v| op.apply(v), cfg.step_size, cfg.cg_iters)?
    };
    let theta: Vec<f64> = policy.params().iter().zip(&step.delta_theta).map(|(p, d)| p + d).collect();
    policy.set_params(&theta)?;
    let kl = old.mean_kl(policy, &fisher_states)?;

    let fit = value.fit(&states, &targets, &cfg.value, &mut rng::stream(seed, Stream::ValueFit, 0))?;
    Ok(NpgStats {
        synthetic_return,
        n_samples: states.len(),
        divergences,
        kl,
        quad_form: step.quad_form,
        fallback: step.fallback,
        skipped: step.skipped,
        explained_variance: fit.explained_variance,
    })
}
