use nalgebra::{DMatrix, DVector};

use super::{TabularMdp, TabularPolicy};
use crate::error::{Error, Result};

/// Iteration cap for [`value_iteration`].
pub const VI_MAX_ITERS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyValue {
    pub values: Vec<f64>,
    /// `J = sum_s rho[s] V[s]`.
    pub performance: f64,
}

/// State-to-state kernel `P_pi[s][s'] = sum_a pi(a|s) P(s'|s,a)`, row-major.
pub fn policy_kernel(mdp: &TabularMdp, policy: &TabularPolicy) -> Result<Vec<f64>> {
    policy.check_against(mdp)?;
    let n = mdp.n_states();
    let mut kernel = vec![0.0; n * n];
    for s in 0..n {
        let out = &mut kernel[s * n..(s + 1) * n];
        for a in 0..mdp.n_actions() {
            let w = policy.prob(s, a);
            if w == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(mdp.row(s, a)) {
                *o += w * p;
            }
        }
    }
    Ok(kernel)
}

/// Solves `V = R + gamma P_pi V` by dense LU.
pub fn exact_policy_value(mdp: &TabularMdp, policy: &TabularPolicy) -> Result<PolicyValue> {
    let n = mdp.n_states();
    let kernel = policy_kernel(mdp, policy)?;
    let gamma = mdp.gamma();
    let a = DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - gamma * kernel[i * n + j]
    });
    let b = DVector::from_column_slice(mdp.rewards());
    let v = a.lu().solve(&b).ok_or(Error::Singular)?;
    let values: Vec<f64> = v.iter().cloned().collect();
    let performance = mdp.rho().iter().zip(&values).map(|(r, v)| r * v).sum();
    Ok(PolicyValue { values, performance })
}

/// Value iteration to Bellman residual `tol`; returns the greedy deterministic
/// policy and its exact performance.
pub fn value_iteration(mdp: &TabularMdp, tol: f64) -> Result<(TabularPolicy, f64)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let n = mdp.n_states();
    let gamma = mdp.gamma();
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut greedy = vec![0usize; n];
    let mut converged = false;
    for _ in 0..VI_MAX_ITERS {
        let mut residual: f64 = 0.0;
        for s in 0..n {
            let mut best = f64::NEG_INFINITY;
            let mut best_a = 0;
            for a in 0..mdp.n_actions() {
                let q: f64 = mdp.row(s, a).iter().zip(&v).map(|(p, v)| p * v).sum();
                if q > best {
                    best = q;
                    best_a = a;
                }
            }
            next[s] = mdp.rewards()[s] + gamma * best;
            greedy[s] = best_a;
            residual = residual.max((next[s] - v[s]).abs());
        }
        std::mem::swap(&mut v, &mut next);
        if residual <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(VI_MAX_ITERS));
    }
    // Greedy with respect to the final iterate.
    for (s, g) in greedy.iter_mut().enumerate() {
        let mut best = f64::NEG_INFINITY;
        for a in 0..mdp.n_actions() {
            let q: f64 = mdp.row(s, a).iter().zip(&v).map(|(p, v)| p * v).sum();
            if q > best {
                best = q;
                *g = a;
            }
        }
    }
    let policy = TabularPolicy::deterministic(&greedy, mdp.n_actions())?;
    let j_star = exact_policy_value(mdp, &policy)?.performance;
    Ok((policy, j_star))
}
