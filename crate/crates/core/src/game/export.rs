//! Tabular images of a learned gridworld run, for checking bounds exactly.
//!
//! States are agent cells for a fixed goal, actions are the nine moves.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::dynamics::DynamicsEnsemble;
use crate::envs::{GridWorld, GRID_MOVES};
use crate::error::{Error, Result};
use crate::mdp::{random::fix_sum, TabularMdp, TabularPolicy};
use crate::policy::GaussianPolicy;

/// Default mass spread uniformly over all cells in an exported model.
pub const MODEL_SMOOTHING: f64 = 0.05;

/// How the continuous policy is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyExport {
    /// Probability of each move under the Gaussian (per-axis CDF mass).
    Stochastic,
    /// All mass on the move selected by the mean action.
    Mean,
}

fn axis_probs(mu: f64, sigma: f64, thr: f64) -> [f64; 3] {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    let down = n.cdf((-thr - mu) / sigma);
    let up = 1.0 - n.cdf((thr - mu) / sigma);
    [down, (1.0 - down - up).max(0.0), up]
}

/// The policy restricted to states with the given goal.
pub fn export_policy(grid: &GridWorld, policy: &GaussianPolicy, goal: (usize, usize), mode: PolicyExport) -> Result<TabularPolicy> {
    let n = grid.n_cells();
    let k = GRID_MOVES.len();
    let thr = grid.config.move_threshold;
    let std = policy.std();
    let mut probs = vec![0.0; n * k];
    for s in 0..n {
        let state = grid.state(grid.cell_at(s), goal);
        let mu = policy.mean_action(&state)?;
        let row = &mut probs[s * k..(s + 1) * k];
        match mode {
            PolicyExport::Mean => row[grid.move_index(&mu)] = 1.0,
            PolicyExport::Stochastic => {
                let px = axis_probs(mu[0], std[0], thr);
                let py = axis_probs(mu[1], std[1], thr);
                for (m, &(dx, dy)) in GRID_MOVES.iter().enumerate() {
                    row[m] = px[(dx + 1) as usize] * py[(dy + 1) as usize];
                }
                fix_sum(row);
            }
        }
    }
    TabularPolicy::new(n, k, probs)
}

/// The ensemble as a tabular model: each member's projected prediction gets
/// `(1 - smoothing) / K`, the rest is spread over all cells.
pub fn export_model(
    grid: &GridWorld,
    ensemble: &DynamicsEnsemble,
    goal: (usize, usize),
    gamma: f64,
    smoothing: f64,
) -> Result<TabularMdp> {
    if !(0.0..=1.0).contains(&smoothing) {
        return Err(Error::InvalidInput(format!("smoothing {smoothing} outside [0, 1]")));
    }
    let world = grid.to_tabular(goal, gamma)?;
    let n = grid.n_cells();
    let k = GRID_MOVES.len();
    let members = ensemble.n_members() as f64;
    let mut transitions = vec![0.0; n * k * n];
    for s in 0..n {
        let state = grid.state(grid.cell_at(s), goal);
        for a in 0..k {
            let action = grid.representative_action(a);
            let row = &mut transitions[(s * k + a) * n..(s * k + a + 1) * n];
            row.iter_mut().for_each(|p| *p = smoothing / n as f64);
            for m in 0..ensemble.n_members() {
                let next = ensemble.predict(m, &state, &action)?;
                if next.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("model prediction during export".into()));
                }
                let cell = grid.cell_index(grid.position(&next));
                row[cell] += (1.0 - smoothing) / members;
            }
            fix_sum(row);
        }
    }
    world.with_transitions(transitions)
}
