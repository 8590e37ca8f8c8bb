//! Trains PAL on the gridworld, exports the final policy and model to tabular form
//! for one goal, and decomposes the equilibrium bound term by term.
//!
//! cargo run --release --example equilibrium_export

use mbrl_game::cli::{resolve, Overrides};
use mbrl_game::game::export::{export_model, export_policy, PolicyExport, MODEL_SMOOTHING};
use mbrl_game::game::{run_game, Solver};
use mbrl_game::verify::{check_theorem1, CheckOptions};

fn main() -> mbrl_game::Result<()> {
    let overrides = Overrides { solver: Some(Solver::Pal), budget: Some(8_000), ..Default::default() };
    let cfg = resolve(Some(include_str!("../../../configs/gridworld.toml")), &overrides)?;
    let run = run_game(&cfg)?;
    let grid = run.env.as_grid().expect("gridworld");
    let goal = (1, 4);
    let gamma = cfg.npg.gamma;
    let world = grid.to_tabular(goal, gamma)?;
    let model = export_model(grid, &run.ensemble, goal, gamma, MODEL_SMOOTHING)?;
    for mode in [PolicyExport::Mean, PolicyExport::Stochastic] {
        let pi = export_policy(grid, &run.policy, goal, mode)?;
        let rep = check_theorem1(&world, &model, &pi, &CheckOptions::default())?;
        println!("{mode:?} policy: J* - J(pi, W) = {:.4}, bound {:.4e}, holds {}", rep.lhs, rep.bound, rep.holds);
        for t in rep.terms.iter().chain(&rep.details) {
            println!("    {:<18} {:.4e}", t.name, t.value);
        }
    }
    Ok(())
}
