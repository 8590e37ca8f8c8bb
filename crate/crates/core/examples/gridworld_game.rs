//! Runs one solver on the goal gridworld and prints the learning curve.
//!
//! cargo run --release --example gridworld_game -- pal 0

use mbrl_game::cli::{resolve, Overrides};
use mbrl_game::game::{run_game, Solver};

fn main() -> mbrl_game::Result<()> {
    let mut args = std::env::args().skip(1);
    let solver: Solver = args.next().as_deref().unwrap_or("pal").parse()?;
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let overrides = Overrides { solver: Some(solver), seed: Some(seed), ..Default::default() };
    let cfg = resolve(Some(include_str!("../../../configs/gridworld.toml")), &overrides)?;

    let run = run_game(&cfg)?;
    println!("iter  samples  J_disc   success  dist  model_loss  secs");
    for r in &run.log.records {
        println!(
            "{:4} {:8} {:8.4} {:8.2} {:5.2} {:10.2e} {:6.1}",
            r.iteration, r.samples, r.eval_discounted, r.success_rate, r.final_distance, r.model_train_loss, r.wall_clock_secs
        );
    }
    println!("{:?}", run.summary());
    Ok(())
}
