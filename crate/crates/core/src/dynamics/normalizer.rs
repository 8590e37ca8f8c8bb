use serde::{Deserialize, Serialize};

use crate::envs::Transition;
use crate::error::{Error, Result};

/// Lower bound on every scale entry.
pub const SCALE_FLOOR: f64 = 1e-6;

/// Per-coordinate centering and scaling fitted on a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub state_mean: Vec<f64>,
    pub state_scale: Vec<f64>,
    pub action_mean: Vec<f64>,
    pub action_scale: Vec<f64>,
    pub delta_scale: Vec<f64>,
}

fn mean_and_scale<'a>(rows: impl Iterator<Item = &'a [f64]> + Clone, dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut n = 0usize;
    let mut mean = vec![0.0; dim];
    for r in rows.clone() {
        n += 1;
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; dim];
    for r in rows {
        for ((acc, v), m) in var.iter_mut().zip(r).zip(&mean) {
            *acc += (v - m) * (v - m);
        }
    }
    let scale = var.iter().map(|v| (v / n as f64).sqrt().max(SCALE_FLOOR)).collect();
    (mean, scale)
}

impl Normalizer {
    pub fn fit(data: &[Transition]) -> Result<Self> {
        let first = data.first().ok_or(Error::EmptyDataset)?;
        let (sd, ad) = (first.state.len(), first.action.len());
        for t in data {
            if t.state.len() != sd || t.next_state.len() != sd {
                return Err(Error::DimensionMismatch { expected: sd, actual: t.state.len().max(t.next_state.len()) });
            }
            if t.action.len() != ad {
                return Err(Error::DimensionMismatch { expected: ad, actual: t.action.len() });
            }
        }
        let (state_mean, state_scale) = mean_and_scale(data.iter().map(|t| t.state.as_slice()), sd);
        let (action_mean, action_scale) = mean_and_scale(data.iter().map(|t| t.action.as_slice()), ad);
        let deltas: Vec<Vec<f64>> =
            data.iter().map(|t| t.next_state.iter().zip(&t.state).map(|(n, s)| n - s).collect()).collect();
        // scale only: predictions are s + scale * net, with no delta offset
        let (_, delta_scale) = mean_and_scale(deltas.iter().map(Vec::as_slice), sd);
        Ok(Self { state_mean, state_scale, action_mean, action_scale, delta_scale })
    }

    pub fn state_dim(&self) -> usize {
        self.state_mean.len()
    }

    pub fn action_dim(&self) -> usize {
        self.action_mean.len()
    }

    /// Network input `((s - mu_s) / sigma_s, (a - mu_a) / sigma_a)`.
    pub fn input(&self, state: &[f64], action: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(state.len() + action.len());
        x.extend(state.iter().zip(&self.state_mean).zip(&self.state_scale).map(|((v, m), s)| (v - m) / s));
        x.extend(action.iter().zip(&self.action_mean).zip(&self.action_scale).map(|((v, m), s)| (v - m) / s));
        x
    }

    pub fn delta_target(&self, state: &[f64], next_state: &[f64]) -> Vec<f64> {
        next_state.iter().zip(state).zip(&self.delta_scale).map(|((n, s), d)| (n - s) / d).collect()
    }
}
