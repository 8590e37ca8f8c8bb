//! PAL or MAL on the point reacher with a mid-budget perturbation; prints the
//! distance-to-goal curve around the change.
//!
//! cargo run --release --example reacher_perturbation -- pal dynamics 0

use mbrl_game::cli::{resolve, Overrides};
use mbrl_game::envs::{PerturbationKind, PerturbationSchedule};
use mbrl_game::game::{run_game, Solver};

fn main() -> mbrl_game::Result<()> {
    let mut args = std::env::args().skip(1);
    let solver: Solver = args.next().as_deref().unwrap_or("pal").parse()?;
    let kind = match args.next().as_deref().unwrap_or("dynamics") {
        "goal" => PerturbationKind::GoalShift,
        _ => PerturbationKind::DynamicsShift,
    };
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let overrides = Overrides { solver: Some(solver), seed: Some(seed), ..Default::default() };
    let mut cfg = resolve(Some(include_str!("../../../configs/reacher.toml")), &overrides)?;
    cfg.perturbation = Some(PerturbationSchedule { trigger_samples: cfg.budget / 2, kind, magnitude: 1.5 });

    let run = run_game(&cfg)?;
    println!("iter samples  distance success perturbed");
    for r in &run.log.records {
        println!("{:4} {:7} {:9.4} {:7.2} {}", r.iteration, r.samples, r.final_distance, r.success_rate, if r.perturbed { "*" } else { "" });
    }
    Ok(())
}
