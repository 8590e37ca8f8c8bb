//! Random tabular instances for property tests and certification sweeps.

use rand::Rng as _;
use rand_distr::{Distribution, Exp1};

use super::{TabularMdp, TabularPolicy};
use crate::rng::Rng;

#[derive(Debug, Clone)]
pub struct RandomMdpSpec {
    pub n_states: usize,
    pub n_actions: usize,
    /// Fixed discount, or uniform in `[0.5, 0.99]` when `None`.
    pub gamma: Option<f64>,
    /// Probability that an individual transition entry is zeroed.
    pub sparsity: f64,
}

impl Default for RandomMdpSpec {
    fn default() -> Self {
        Self { n_states: 5, n_actions: 2, gamma: None, sparsity: 0.0 }
    }
}

/// Random probability vector; with `sparsity > 0` some entries are zero but at
/// least one entry is always kept.
pub fn random_distribution(rng: &mut Rng, n: usize, sparsity: f64) -> Vec<f64> {
    let keep = rng.gen_range(0..n);
    let mut v: Vec<f64> = (0..n)
        .map(|i| {
            if i != keep && sparsity > 0.0 && rng.gen_bool(sparsity) {
                0.0
            } else {
                Exp1.sample(rng)
            }
        })
        .collect();
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    fix_sum(&mut v);
    v
}

/// Pushes rounding error into the largest entry so the vector sums to one.
pub(crate) fn fix_sum(v: &mut [f64]) {
    let total: f64 = v.iter().sum();
    if let Some(i) = (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])) {
        v[i] += 1.0 - total;
    }
}

pub fn random_transitions(rng: &mut Rng, n_states: usize, n_actions: usize, sparsity: f64) -> Vec<f64> {
    (0..n_states * n_actions)
        .flat_map(|_| random_distribution(rng, n_states, sparsity))
        .collect()
}

pub fn random_mdp(rng: &mut Rng, spec: &RandomMdpSpec) -> TabularMdp {
    let n = spec.n_states;
    let transitions = random_transitions(rng, n, spec.n_actions, spec.sparsity);
    let rewards: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let gamma = spec.gamma.unwrap_or_else(|| rng.gen_range(0.5..0.99));
    let rho = random_distribution(rng, n, spec.sparsity);
    TabularMdp::new(n, spec.n_actions, transitions, rewards, gamma, rho)
        .expect("generated MDP is valid")
}

/// Model of `world` whose rows mix in a full-support random row with weight `mix`.
pub fn perturbed_model(rng: &mut Rng, world: &TabularMdp, mix: f64) -> TabularMdp {
    let n = world.n_states();
    let mut transitions = Vec::with_capacity(world.transitions().len());
    for s in 0..n {
        for a in 0..world.n_actions() {
            let noise = random_distribution(rng, n, 0.0);
            let mut row: Vec<f64> =
                world.row(s, a).iter().zip(&noise).map(|(p, q)| (1.0 - mix) * p + mix * q).collect();
            fix_sum(&mut row);
            transitions.extend(row);
        }
    }
    world.with_transitions(transitions).expect("mixture rows are stochastic")
}

pub fn random_policy(rng: &mut Rng, n_states: usize, n_actions: usize) -> TabularPolicy {
    let probs: Vec<f64> =
        (0..n_states).flat_map(|_| random_distribution(rng, n_actions, 0.0)).collect();
    TabularPolicy::new(n_states, n_actions, probs).expect("generated policy is valid")
}
