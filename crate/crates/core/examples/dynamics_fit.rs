//! Fits a dynamics ensemble to random-policy reacher data and reports train and
//! holdout loss per member, then one-step prediction error on fresh data.
//!
//! cargo run --release --example dynamics_fit

use mbrl_game::dynamics::{DynamicsEnsemble, ModelTrainConfig};
use mbrl_game::envs::{collect_rollouts, make_env, Transition};
use mbrl_game::policy::GaussianPolicy;
use mbrl_game::rng;

fn main() -> mbrl_game::Result<()> {
    let env = make_env("point-reacher")?;
    let spec = env.spec();
    let policy = GaussianPolicy::new(spec.state_dim, spec.action_dim, &[16], &mut rng::from_seed(0));
    let flat = |seed| -> mbrl_game::Result<Vec<Transition>> {
        Ok(collect_rollouts(&env, &policy, 3000, seed)?.into_iter().flat_map(|t| t.transitions).collect())
    };
    let train = flat(1)?;
    let test = flat(2)?;

    let mut ens = DynamicsEnsemble::new(spec.state_dim, spec.action_dim, &[64, 64], 3, 0)?;
    let cfg = ModelTrainConfig { epochs: 30, ..Default::default() };
    let rep = ens.train(&train, &cfg, 0)?;
    println!("{} transitions; train loss {:.3e}; holdout {:?}", train.len(), rep.mean_train_loss(), rep.mean_holdout_loss());
    for m in 0..ens.n_members() {
        let err: f64 = test
            .iter()
            .map(|t| {
                let p = ens.predict(m, &t.state, &t.action).expect("dims match");
                p.iter().zip(&t.next_state).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
            })
            .sum::<f64>()
            / test.len() as f64;
        println!("member {m}: mean one-step error on fresh data {err:.2e}");
    }
    Ok(())
}
