//! Trains PAL briefly on the point reacher, then compares open-loop and closed-loop
//! model error over a 50-step look-ahead.
//!
//! cargo run --release --example amplification

use mbrl_game::cli::{resolve, Overrides};
use mbrl_game::game::{run_game, Solver};
use mbrl_game::policy::RolloutModel;
use mbrl_game::verify::{amplification_profile, LoopMode};

fn main() -> mbrl_game::Result<()> {
    let overrides = Overrides { solver: Some(Solver::Pal), budget: Some(10_000), ..Default::default() };
    let cfg = resolve(Some(include_str!("../../../configs/reacher.toml")), &overrides)?;
    let run = run_game(&cfg)?;
    let model = RolloutModel::Learned(&run.ensemble);
    let open = amplification_profile(&run.env, &run.policy, model, LoopMode::Open, 50, 20, 0)?;
    let closed = amplification_profile(&run.env, &run.policy, model, LoopMode::Closed, 50, 20, 0)?;
    println!("   t   L_open    L_closed");
    for t in (0..=50).step_by(5) {
        let cell = |p: &[f64]| p.get(t).map_or("-".to_string(), |x| format!("{x:.3e}"));
        println!("{t:4}   {}  {}", cell(&open.errors), cell(&closed.errors));
    }
    Ok(())
}
