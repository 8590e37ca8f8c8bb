use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Activation, Adam, Mlp};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValueFitConfig {
    pub epochs: usize,
    pub minibatch: usize,
    pub lr: f64,
}

impl Default for ValueFitConfig {
    fn default() -> Self {
        Self { epochs: 2, minibatch: 64, lr: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueFitReport {
    pub mse_before: f64,
    pub mse_after: f64,
    /// `1 - Var(target - V) / Var(target)` before the fit.
    pub explained_variance: f64,
    /// Euclidean norm of the parameter change.
    pub param_change: f64,
}

/// State-value baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueNet {
    pub net: Mlp,
}

impl ValueNet {
    pub fn new(state_dim: usize, hidden: &[usize], rng: &mut Rng) -> Self {
        let mut sizes = vec![state_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        Self { net: Mlp::new(&sizes, Activation::Tanh, rng) }
    }

    pub fn predict(&self, state: &[f64]) -> Result<f64> {
        Ok(self.net.forward(state)?[0])
    }

    fn mse(&self, states: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (s, t) in states.iter().zip(targets) {
            total += (self.predict(s)? - t).powi(2);
        }
        Ok(total / states.len() as f64)
    }

    /// Mean squared error over `batch` (indices into `states`) and its parameter gradient,
    /// written into `grad`.
    pub fn batch_gradient(&self, states: &[Vec<f64>], targets: &[f64], batch: &[usize], grad: &mut [f64]) -> Result<f64> {
        if grad.len() != self.net.n_params() {
            return Err(Error::DimensionMismatch { expected: self.net.n_params(), actual: grad.len() });
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        let scale = 2.0 / batch.len().max(1) as f64;
        let mut loss = 0.0;
        for &i in batch {
            let cache = self.net.forward_cached(&states[i])?;
            let diff = cache.output()[0] - targets[i];
            loss += diff * diff;
            self.net.backward(&cache, &[scale * diff], grad)?;
        }
        Ok(loss / batch.len().max(1) as f64)
    }

    /// Minibatch Adam regression onto `targets`.
    pub fn fit(&mut self, states: &[Vec<f64>], targets: &[f64], cfg: &ValueFitConfig, rng: &mut Rng) -> Result<ValueFitReport> {
        if states.len() != targets.len() {
            return Err(Error::DimensionMismatch { expected: states.len(), actual: targets.len() });
        }
        if states.is_empty() {
            return Err(Error::EmptyDataset);
        }
        crate::error::ensure_finite(targets, "value targets")?;
        let before: Vec<f64> = states.iter().map(|s| self.predict(s)).collect::<Result<_>>()?;
        let mse_before = before.iter().zip(targets).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / states.len() as f64;
        let explained_variance = explained_variance(&before, targets);

        let start = self.net.params().to_vec();
        let mut adam = Adam::new(self.net.n_params(), cfg.lr);
        let mut grad = vec![0.0; self.net.n_params()];
        let mut order: Vec<usize> = (0..states.len()).collect();
        let mb = cfg.minibatch.clamp(1, states.len());
        for _ in 0..cfg.epochs {
            order.shuffle(rng);
            for batch in order.chunks(mb) {
                self.batch_gradient(states, targets, batch, &mut grad)?;
                adam.step(self.net.params_mut(), &grad)?;
            }
        }
        let param_change =
            self.net.params().iter().zip(&start).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        Ok(ValueFitReport { mse_before, mse_after: self.mse(states, targets)?, explained_variance, param_change })
    }
}

pub fn explained_variance(pred: &[f64], targets: &[f64]) -> f64 {
    let n = targets.len() as f64;
    let mt = targets.iter().sum::<f64>() / n;
    let vt = targets.iter().map(|t| (t - mt).powi(2)).sum::<f64>() / n;
    let res: Vec<f64> = targets.iter().zip(pred).map(|(t, p)| t - p).collect();
    let mr = res.iter().sum::<f64>() / n;
    let vr = res.iter().map(|r| (r - mr).powi(2)).sum::<f64>() / n;
    if vt > 1e-12 * (1.0 + mt * mt) {
        1.0 - vr / vt
    } else {
        0.0
    }
}
