//! Checks the four bounds on one random world/model pair and prints each report.
//!
//! cargo run --release --example tabular_bounds -- 7

use mbrl_game::mdp::random::{perturbed_model, random_mdp, random_policy, RandomMdpSpec};
use mbrl_game::rng;
use mbrl_game::verify::{
    chain_of, check_error_amplification, check_performance_difference, check_simulation_lemma, check_theorem1,
    BoundReport, CheckOptions,
};

fn show(rep: &BoundReport) {
    println!("{}: lhs {:.4e} <= bound {:.4e}  holds={} tightness={:.3}", rep.id, rep.lhs, rep.bound, rep.holds, rep.tightness);
    for t in &rep.terms {
        println!("    term   {:<18} {:.4e}", t.name, t.value);
    }
    for d in &rep.details {
        println!("    detail {:<18} {:.4e}", d.name, d.value);
    }
}

fn main() -> mbrl_game::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let mut r = rng::from_seed(seed);
    let world = random_mdp(&mut r, &RandomMdpSpec { n_states: 6, n_actions: 3, gamma: Some(0.9), sparsity: 0.3 });
    let model = perturbed_model(&mut r, &world, 0.1);
    let pi = random_policy(&mut r, 6, 3);
    let opts = CheckOptions::default();

    show(&check_simulation_lemma(&world, &model, &pi, &opts)?);
    let (chain, rep) = check_error_amplification(&chain_of(&world, &pi)?, &chain_of(&model, &pi)?, world.rho(), 20, &opts)?;
    show(&rep);
    println!("    TV_t: {:.3?}", &chain.marginal_tv[..6]);
    show(&check_performance_difference(&world, &model, &pi, &opts)?);
    show(&check_theorem1(&world, &model, &pi, &opts)?);
    Ok(())
}
