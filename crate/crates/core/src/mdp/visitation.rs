use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{policy_kernel, TabularMdp, TabularPolicy};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum VisitationKind {
    /// Mean of the forward marginals over `t = 0..horizon-1`.
    Average { horizon: usize },
    /// `(1 - gamma) sum_t gamma^t P(s_t = s)`.
    Discounted,
    /// `P(s_t = s)` at a single `t`.
    Marginal { t: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitationDistribution {
    pub kind: VisitationKind,
    pub states: Vec<f64>,
    /// `states[s] * pi(a|s)`, row-major over `(s, a)`.
    pub state_actions: Vec<f64>,
}

fn step(dist: &[f64], kernel: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (s, &w) in dist.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (o, p) in out.iter_mut().zip(&kernel[s * n..(s + 1) * n]) {
            *o += w * p;
        }
    }
    out
}

/// Forward state marginals `rho^T P_pi^t` for `t = 0..=t_max`.
pub fn marginals(mdp: &TabularMdp, policy: &TabularPolicy, t_max: usize) -> Result<Vec<Vec<f64>>> {
    let kernel = policy_kernel(mdp, policy)?;
    let n = mdp.n_states();
    let mut out = Vec::with_capacity(t_max + 1);
    out.push(mdp.rho().to_vec());
    for t in 0..t_max {
        let next = step(&out[t], &kernel, n);
        out.push(next);
    }
    Ok(out)
}

pub fn visitation(
    mdp: &TabularMdp,
    policy: &TabularPolicy,
    kind: VisitationKind,
) -> Result<VisitationDistribution> {
    let n = mdp.n_states();
    let states = match kind {
        VisitationKind::Average { horizon } => {
            if horizon == 0 {
                return Err(Error::InvalidInput("average visitation needs horizon >= 1".into()));
            }
            let ms = marginals(mdp, policy, horizon - 1)?;
            let mut avg = vec![0.0; n];
            for m in &ms {
                for (a, x) in avg.iter_mut().zip(m) {
                    *a += x;
                }
            }
            avg.iter_mut().for_each(|a| *a /= horizon as f64);
            avg
        }
        VisitationKind::Marginal { t } => marginals(mdp, policy, t)?.pop().expect("t + 1 marginals"),
        VisitationKind::Discounted => {
            let kernel = policy_kernel(mdp, policy)?;
            let gamma = mdp.gamma();
            // (I - gamma P_pi^T) mu = (1 - gamma) rho
            let a = DMatrix::from_fn(n, n, |i, j| {
                let id = if i == j { 1.0 } else { 0.0 };
                id - gamma * kernel[j * n + i]
            });
            let b = DVector::from_iterator(n, mdp.rho().iter().map(|r| (1.0 - gamma) * r));
            let mu = a.lu().solve(&b).ok_or(Error::Singular)?;
            mu.iter().cloned().collect()
        }
    };
    let k = mdp.n_actions();
    let state_actions =
        (0..n * k).map(|i| states[i / k] * policy.prob(i / k, i % k)).collect();
    Ok(VisitationDistribution { kind, states, state_actions })
}
