//! Normalized natural gradient ascent on a one-state Gaussian bandit with reward
//! `-(a - 0.8)^2`. Each step moves exactly `delta` in the Fisher metric.
//!
//! cargo run --release --example npg_bandit

use mbrl_game::policy::{normalized_step, policy_gradient, standardize, FisherOperator, GaussianPolicy};
use mbrl_game::rng;

fn main() -> mbrl_game::Result<()> {
    let target = 0.8;
    let state = vec![1.0];
    let mut policy = GaussianPolicy::new(1, 1, &[8], &mut rng::from_seed(0));
    let mut r = rng::from_seed(1);
    println!("step   mean    std    J      quad_form");
    for step in 0..30 {
        let states = vec![state.clone(); 2000];
        let actions: Vec<Vec<f64>> = states.iter().map(|s| policy.sample(s, &mut r)).collect::<Result<_, _>>()?;
        let mut adv: Vec<f64> = actions.iter().map(|a| -(a[0] - target).powi(2)).collect();
        let j = adv.iter().sum::<f64>() / adv.len() as f64;
        standardize(&mut adv);
        let g = policy_gradient(&policy, &states, &actions, &adv)?;
        let op = FisherOperator::new(&policy, &states[..1], 1e-4)?;
        let s = normalized_step(&g, |v| op.apply(v), 0.05, 10)?;
        let theta: Vec<f64> = policy.params().iter().zip(&s.delta_theta).map(|(p, d)| p + d).collect();
        policy.set_params(&theta)?;
        if step % 3 == 0 {
            println!("{step:4} {:7.3} {:6.3} {j:7.4} {:.6}", policy.mean_action(&state)?[0], policy.std()[0], s.quad_form);
        }
    }
    Ok(())
}
