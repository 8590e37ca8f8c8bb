//! Randomized certification sweep over all four bounds, with per-suite tightness.
//!
//! cargo run --release --example verify_sweep -- 200

use mbrl_game::verify::{run_sweep, Suite, SweepConfig};

fn main() -> mbrl_game::Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let res = run_sweep(&Suite::ALL, &SweepConfig { trials, ..Default::default() })?;
    for s in &res.summaries {
        println!(
            "{:<9} {} trials, {} violations, tightness median {:.3} max {:.3}",
            s.suite.to_string(),
            s.trials,
            s.violations,
            s.median_tightness,
            s.max_tightness
        );
    }
    if let Some(v) = &res.first_violation {
        println!("first violation: {} trial {}", v.suite, v.trial);
    }
    Ok(())
}
