//! Exact tabular solve of the gridworld for one goal: value iteration, the greedy
//! policy's values, and its discounted visitation.
//!
//! cargo run --release --example value_iteration

use mbrl_game::envs::make_env;
use mbrl_game::mdp::{exact_policy_value, value_iteration, visitation, VisitationKind};

fn main() -> mbrl_game::Result<()> {
    let env = make_env("gridworld-goal")?;
    let grid = env.as_grid().expect("gridworld");
    let goal = (2, 5);
    let mdp = grid.to_tabular(goal, 0.95)?;
    let (pi, j) = value_iteration(&mdp, 1e-12)?;
    let v = exact_policy_value(&mdp, &pi)?.values;
    let mu = visitation(&mdp, &pi, VisitationKind::Discounted)?.states;

    let size = grid.config.size;
    println!("J* = {j:.4} for goal {goal:?}\n\nV*(x, y), y down:");
    for y in 0..size {
        let row: Vec<String> = (0..size).map(|x| format!("{:6.2}", v[grid.cell_index((x, y))])).collect();
        println!("{}", row.join(" "));
    }
    println!("\ndiscounted visitation x100:");
    for y in 0..size {
        let row: Vec<String> = (0..size).map(|x| format!("{:5.1}", 100.0 * mu[grid.cell_index((x, y))])).collect();
        println!("{}", row.join(" "));
    }
    Ok(())
}
