//! Exact finite-MDP machinery used as ground truth by the verification harness.

mod dist;
mod eval;
pub mod random;
mod visitation;

pub use dist::{gaussian_kl, kl_divergence, tv_distance};
pub use eval::{exact_policy_value, policy_kernel, value_iteration, PolicyValue, VI_MAX_ITERS};
pub use visitation::{marginals, visitation, VisitationDistribution, VisitationKind};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest state space the dense solvers accept.
pub const MAX_STATES: usize = 200;

const STOCHASTIC_TOL: f64 = 1e-12;

/// A finite MDP with state-only rewards: `(S, A, P, R, gamma, rho)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    /// Row-major `P[s][a][s']`.
    transitions: Vec<f64>,
    rewards: Vec<f64>,
    gamma: f64,
    rho: Vec<f64>,
}

fn check_distribution(row: &[f64], what: &str) -> Result<()> {
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidInput(format!("{what} has a negative or non-finite entry")));
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::InvalidInput(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

impl TabularMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transitions: Vec<f64>,
        rewards: Vec<f64>,
        gamma: f64,
        rho: Vec<f64>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidInput("MDP needs at least one state and one action".into()));
        }
        if n_states > MAX_STATES {
            return Err(Error::InvalidInput(format!(
                "{n_states} states exceeds the exact-solver cap of {MAX_STATES}"
            )));
        }
        if transitions.len() != n_states * n_actions * n_states {
            return Err(Error::DimensionMismatch {
                expected: n_states * n_actions * n_states,
                actual: transitions.len(),
            });
        }
        if rewards.len() != n_states {
            return Err(Error::DimensionMismatch { expected: n_states, actual: rewards.len() });
        }
        if rho.len() != n_states {
            return Err(Error::DimensionMismatch { expected: n_states, actual: rho.len() });
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidInput(format!("discount {gamma} outside [0, 1)")));
        }
        if rewards.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::InvalidInput("rewards must be finite and non-negative".into()));
        }
        for (i, row) in transitions.chunks(n_states).enumerate() {
            check_distribution(row, &format!("P[{}][{}]", i / n_actions, i % n_actions))?;
        }
        check_distribution(&rho, "rho")?;
        Ok(Self { n_states, n_actions, transitions, rewards, gamma, rho })
    }

    /// Builds from nested `P[s][a][s']`.
    pub fn from_nested(
        transitions: &[Vec<Vec<f64>>],
        rewards: Vec<f64>,
        gamma: f64,
        rho: Vec<f64>,
    ) -> Result<Self> {
        let n_states = transitions.len();
        let n_actions = transitions.first().map_or(0, |t| t.len());
        let mut flat = Vec::with_capacity(n_states * n_actions * n_states);
        for per_state in transitions {
            if per_state.len() != n_actions {
                return Err(Error::DimensionMismatch { expected: n_actions, actual: per_state.len() });
            }
            for row in per_state {
                flat.extend_from_slice(row);
            }
        }
        Self::new(n_states, n_actions, flat, rewards, gamma, rho)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// Largest reward, the tightest valid `R_max`.
    pub fn r_max(&self) -> f64 {
        self.rewards.iter().cloned().fold(0.0, f64::max)
    }

    /// `P(. | s, a)`.
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transitions[start..start + self.n_states]
    }

    pub fn transitions(&self) -> &[f64] {
        &self.transitions
    }

    /// Same MDP with a different transition tensor.
    pub fn with_transitions(&self, transitions: Vec<f64>) -> Result<Self> {
        Self::new(
            self.n_states,
            self.n_actions,
            transitions,
            self.rewards.clone(),
            self.gamma,
            self.rho.clone(),
        )
    }

    /// Checks that `other` differs from `self` at most in its transitions.
    pub fn check_same_shape(&self, other: &TabularMdp) -> Result<()> {
        if self.n_states != other.n_states {
            return Err(Error::DimensionMismatch { expected: self.n_states, actual: other.n_states });
        }
        if self.n_actions != other.n_actions {
            return Err(Error::DimensionMismatch {
                expected: self.n_actions,
                actual: other.n_actions,
            });
        }
        if self.rewards != other.rewards || self.rho != other.rho || self.gamma != other.gamma {
            return Err(Error::InvalidInput(
                "MDPs must share rewards, discount and initial distribution".into(),
            ));
        }
        Ok(())
    }
}

/// Stochastic policy `pi[s][a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularPolicy {
    n_actions: usize,
    probs: Vec<f64>,
}

impl TabularPolicy {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != n_states * n_actions {
            return Err(Error::DimensionMismatch { expected: n_states * n_actions, actual: probs.len() });
        }
        for (s, row) in probs.chunks(n_actions).enumerate() {
            check_distribution(row, &format!("pi[{s}]"))?;
        }
        Ok(Self { n_actions, probs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_actions = rows.first().map_or(0, |r| r.len());
        let probs: Vec<f64> = rows.iter().flatten().cloned().collect();
        Self::new(rows.len(), n_actions, probs)
    }

    pub fn deterministic(actions: &[usize], n_actions: usize) -> Result<Self> {
        let mut probs = vec![0.0; actions.len() * n_actions];
        for (s, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(Error::InvalidInput(format!("action {a} out of range")));
            }
            probs[s * n_actions + a] = 1.0;
        }
        Self::new(actions.len(), n_actions, probs)
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self { n_actions, probs: vec![1.0 / n_actions as f64; n_states * n_actions] }
    }

    pub fn n_states(&self) -> usize {
        self.probs.len() / self.n_actions
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    pub(crate) fn check_against(&self, mdp: &TabularMdp) -> Result<()> {
        if self.n_actions != mdp.n_actions() {
            return Err(Error::DimensionMismatch { expected: mdp.n_actions(), actual: self.n_actions });
        }
        if self.n_states() != mdp.n_states() {
            return Err(Error::DimensionMismatch { expected: mdp.n_states(), actual: self.n_states() });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_stochastic_rows() {
        let err = TabularMdp::new(1, 1, vec![0.9], vec![0.0], 0.9, vec![1.0]);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rejects_bad_discount_and_shapes() {
        assert!(TabularMdp::new(1, 1, vec![1.0], vec![0.0], 1.0, vec![1.0]).is_err());
        assert!(TabularMdp::new(1, 1, vec![1.0, 0.0], vec![0.0], 0.5, vec![1.0]).is_err());
        assert!(TabularPolicy::new(2, 2, vec![0.5, 0.5, 1.0, 0.1]).is_err());
    }

    #[test]
    fn nested_and_flat_agree() {
        let nested = vec![vec![vec![0.0, 1.0]], vec![vec![0.0, 1.0]]];
        let m = TabularMdp::from_nested(&nested, vec![0.0, 1.0], 0.9, vec![1.0, 0.0]).unwrap();
        assert_eq!(m.row(0, 0), &[0.0, 1.0]);
        assert_eq!(m.r_max(), 1.0);
    }
}
