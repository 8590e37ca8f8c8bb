use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::envs::Actor;
use crate::error::{Error, Result};
use crate::nn::{checkpoint, gaussian_log_density, gaussian_score, Activation, Mlp};
use crate::rng::Rng;

/// Initial per-dimension log standard deviation.
pub const INIT_LOG_STD: f64 = -1.0;

/// Diagonal Gaussian policy: tanh MLP mean and state-independent log-std.
///
/// The flat parameter vector is the mean network's parameters followed by `log_std`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    pub mean: Mlp,
    pub log_std: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PolicyHeader {
    sizes: Vec<usize>,
    activation: Activation,
    action_dim: usize,
}

impl GaussianPolicy {
    pub fn new(state_dim: usize, action_dim: usize, hidden: &[usize], rng: &mut Rng) -> Self {
        let mut sizes = vec![state_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(action_dim);
        let mut mean = Mlp::new(&sizes, Activation::Tanh, rng);
        mean.scale_output_layer(0.01);
        Self { mean, log_std: vec![INIT_LOG_STD; action_dim] }
    }

    pub fn state_dim(&self) -> usize {
        self.mean.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn n_params(&self) -> usize {
        self.mean.n_params() + self.log_std.len()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = self.mean.params().to_vec();
        p.extend_from_slice(&self.log_std);
        p
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::DimensionMismatch { expected: self.n_params(), actual: params.len() });
        }
        let n = self.mean.n_params();
        self.mean.set_params(&params[..n])?;
        self.log_std.copy_from_slice(&params[n..]);
        Ok(())
    }

    pub fn std(&self) -> Vec<f64> {
        self.log_std.iter().map(|l| l.exp()).collect()
    }

    pub fn mean_action(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.mean.forward(state)
    }

    pub fn sample(&self, state: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
        let mut a = self.mean_action(state)?;
        for (v, ls) in a.iter_mut().zip(&self.log_std) {
            let z: f64 = StandardNormal.sample(rng);
            *v += ls.exp() * z;
        }
        Ok(a)
    }

    pub fn log_prob(&self, state: &[f64], action: &[f64]) -> Result<f64> {
        let m = self.mean_action(state)?;
        Ok(gaussian_log_density(action, &m, &self.log_std))
    }

    /// Adds `weight * grad log pi(action | state)` into `grad`.
    pub fn accumulate_score(&self, state: &[f64], action: &[f64], weight: f64, grad: &mut [f64]) -> Result<()> {
        if grad.len() != self.n_params() {
            return Err(Error::DimensionMismatch { expected: self.n_params(), actual: grad.len() });
        }
        let cache = self.mean.forward_cached(state)?;
        let (d_mean, d_log_std) = gaussian_score(action, cache.output(), &self.log_std);
        let upstream: Vec<f64> = d_mean.iter().map(|d| d * weight).collect();
        let n = self.mean.n_params();
        let (gm, gs) = grad.split_at_mut(n);
        self.mean.backward(&cache, &upstream, gm)?;
        for (g, d) in gs.iter_mut().zip(&d_log_std) {
            *g += weight * d;
        }
        Ok(())
    }

    /// KL(self || other) averaged over `states`.
    pub fn mean_kl(&self, other: &GaussianPolicy, states: &[Vec<f64>]) -> Result<f64> {
        if states.is_empty() {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for s in states {
            let (m1, m2) = (self.mean_action(s)?, other.mean_action(s)?);
            for i in 0..m1.len() {
                let (l1, l2) = (self.log_std[i], other.log_std[i]);
                let v1 = (2.0 * l1).exp();
                let v2 = (2.0 * l2).exp();
                total += l2 - l1 + (v1 + (m1[i] - m2[i]).powi(2)) / (2.0 * v2) - 0.5;
            }
        }
        Ok(total / states.len() as f64)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let header =
            PolicyHeader { sizes: self.mean.sizes().to_vec(), activation: self.mean.hidden_activation(), action_dim: self.action_dim() };
        checkpoint::write(path, &header, &self.params())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (h, params): (PolicyHeader, Vec<f64>) = checkpoint::read(path)?;
        let mut p = Self { mean: Mlp::zeros(&h.sizes, h.activation), log_std: vec![0.0; h.action_dim] };
        p.set_params(&params).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        Ok(p)
    }
}

impl Actor for GaussianPolicy {
    fn act(&self, state: &[f64], rng: &mut Rng) -> Vec<f64> {
        self.sample(state, rng).expect("state dimension matches the policy")
    }
}

/// Deterministic deployment of a policy through its mean action.
#[derive(Debug, Clone, Copy)]
pub struct MeanActor<'a>(pub &'a GaussianPolicy);

impl Actor for MeanActor<'_> {
    fn act(&self, state: &[f64], _rng: &mut Rng) -> Vec<f64> {
        self.0.mean_action(state).expect("state dimension matches the policy")
    }
}
