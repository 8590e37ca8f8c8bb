//! The `mbrl` command line: `train`, `verify` and `diagnose`.
//!
//! Exit codes: 0 success, 1 a bound violation or other failure, 2 a usage or
//! config error, 3 a run that diverged beyond the retry policy.

mod config;
mod manifest;

pub use config::{config_hash, parse_seeds, resolve, Overrides};
pub use manifest::RunManifest;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::dynamics::DynamicsEnsemble;
use crate::envs::{Env, EnvName};
use crate::error::{Error, Result};
use crate::game::{run_game, GameConfig, GameRun};
use crate::policy::{GaussianPolicy, RolloutModel};
use crate::verify::{amplification_profile, run_sweep, AmplificationProfile, CheckOptions, LoopMode, Suite, SweepConfig};

/// Default output root when `--out` is not given.
pub const OUT_ROOT_VAR: &str = "MBRL_OUT_ROOT";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

pub const POLICY_FILE: &str = "policy.ckpt";
pub const ENSEMBLE_FILE: &str = "ensemble.ckpt";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const LOG_FILE: &str = "log.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Parser)]
#[command(name = "mbrl", version, about = "Model-based RL as a policy-vs-model game")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one solver, once per seed.
    Train(TrainArgs),
    /// Certify the tabular bounds on random instances.
    Verify(VerifyArgs),
    /// Open- and closed-loop model error of a trained run.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `0..4` (inclusive), `1,4,9`; overrides `--seed`.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Seeds run in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub solver: Option<String>,
    #[arg(long)]
    pub env: Option<String>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Lemma1,
    Lemma2,
    Lemma3,
    Theorem1,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub suite: SuiteArg,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Multiplies every bound (negative control).
    #[arg(long, hide = true, default_value_t = 1.0)]
    pub corrupt_bound_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Open,
    Closed,
    Both,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// A run directory written by `train`.
    pub checkpoint_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    pub mode: ModeArg,
    /// Look-ahead horizon, clamped to the episode horizon.
    #[arg(long = "horizon", short = 't', default_value_t = 50)]
    pub horizon: usize,
    /// Rollouts per mode.
    #[arg(long, short = 'n', default_value_t = 20)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Replace the ensemble by the world's own dynamics.
    #[arg(long)]
    pub exact_model: bool,
    /// Output CSV; defaults to `profile.csv` in the checkpoint directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Maps an error to its exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::UnknownEnv(_) | Error::InvalidInput(_) | Error::UnsupportedPerturbation { .. } => EXIT_USAGE,
        Error::Checkpoint(_) => EXIT_USAGE,
        Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => EXIT_USAGE,
        Error::NonFinite(_) => EXIT_DIVERGED,
        _ => EXIT_FAILURE,
    }
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Diagnose(a) => cmd_diagnose(&a).map(|_| EXIT_OK),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn out_root(out: &Option<PathBuf>) -> PathBuf {
    out.clone()
        .or_else(|| std::env::var_os(OUT_ROOT_VAR).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Resolved configs for every requested seed.
pub fn train_configs(a: &TrainArgs) -> Result<Vec<GameConfig>> {
    let text = match &a.config {
        Some(p) => Some(fs::read_to_string(p).map_err(|e| Error::Config {
            field: "config".into(),
            message: format!("cannot read {}: {e}", p.display()),
        })?),
        None => None,
    };
    let overrides = Overrides {
        solver: a.solver.as_deref().map(str::parse).transpose()?,
        env: a
            .env
            .as_deref()
            .map(|e| e.parse::<EnvName>().map_err(|_| Error::Config { field: "env".into(), message: format!("unknown env `{e}`") }))
            .transpose()?,
        seed: a.seed,
        budget: a.budget,
    };
    let base = resolve(text.as_deref(), &overrides)?;
    let seeds = match &a.seeds {
        Some(s) => parse_seeds(s)?,
        None => vec![base.seed],
    };
    Ok(seeds.into_iter().map(|seed| GameConfig { seed, ..base.clone() }).collect())
}

/// `<root>/<solver>-<env>-seed<seed>`.
pub fn run_dir(root: &Path, cfg: &GameConfig) -> PathBuf {
    let env = serde_json::to_value(cfg.env).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    root.join(format!("{}-{}-seed{}", cfg.solver, env, cfg.seed))
}

/// Writes the log, summary, checkpoints and manifest of a finished run.
pub fn write_run(dir: &Path, run: &GameRun, started: u64) -> Result<RunManifest> {
    fs::create_dir_all(dir)?;
    let hash = config_hash(&run.config);
    let mut csv = Vec::new();
    run.log.write_csv(&mut csv, &hash)?;
    fs::write(dir.join(LOG_FILE), csv)?;
    let mut summary = serde_json::to_value(run.summary())?;
    summary["config_hash"] = hash.clone().into();
    fs::write(dir.join(SUMMARY_FILE), serde_json::to_string_pretty(&summary)?)?;
    run.policy.save(&dir.join(POLICY_FILE))?;
    run.ensemble.save(&dir.join(ENSEMBLE_FILE))?;
    let manifest = RunManifest::new(&run.config, dir, started);
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

fn train_one(cfg: &GameConfig, root: &Path) -> Result<RunManifest> {
    let started = manifest::now_secs();
    let run = run_game(cfg)?;
    let dir = run_dir(root, cfg);
    let m = write_run(&dir, &run, started)?;
    let s = run.summary();
    println!(
        "{} seed {}: samples_to_success={} final_J={:.4} final_success={:.2} -> {}",
        s.solver,
        s.seed,
        s.samples_to_success.map_or("none".into(), |n| n.to_string()),
        s.final_j,
        s.final_success,
        dir.display()
    );
    Ok(m)
}

pub fn cmd_train(a: &TrainArgs) -> Result<i32> {
    let cfgs = train_configs(a)?;
    let root = out_root(&a.out);
    let results: Vec<Result<RunManifest>> = if a.jobs > 1 && cfgs.len() > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(a.jobs)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
        pool.install(|| cfgs.par_iter().map(|c| train_one(c, &root)).collect())
    } else {
        cfgs.iter().map(|c| train_one(c, &root)).collect()
    };
    // report every failure, exit with the most severe code
    let mut code = EXIT_OK;
    for r in results {
        if let Err(e) = r {
            eprintln!("error: {e}");
            code = code.max(exit_code(&e));
        }
    }
    Ok(code)
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    if a.trials == 0 {
        return Err(Error::Config { field: "trials".into(), message: "must be at least 1".into() });
    }
    let suites = match a.suite {
        SuiteArg::Lemma1 => vec![Suite::Lemma1],
        SuiteArg::Lemma2 => vec![Suite::Lemma2],
        SuiteArg::Lemma3 => vec![Suite::Lemma3],
        SuiteArg::Theorem1 => vec![Suite::Theorem1],
        SuiteArg::All => Suite::ALL.to_vec(),
    };
    let cfg = SweepConfig {
        trials: a.trials,
        seed: a.seed,
        options: CheckOptions { bound_scale: a.corrupt_bound_scale, ..Default::default() },
        ..Default::default()
    };
    let res = run_sweep(&suites, &cfg)?;
    let dir = out_root(&a.out).join(format!("verify-seed{}", a.seed));
    fs::create_dir_all(&dir)?;
    let mut csv = Vec::new();
    res.write_csv(&mut csv)?;
    fs::write(dir.join("sweep.csv"), csv)?;
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&res.summaries)?)?;
    for s in &res.summaries {
        println!(
            "{:<9} trials={} violations={} median_tightness={:.3e} max_tightness={:.3e}",
            s.suite.to_string(),
            s.trials,
            s.violations,
            s.median_tightness,
            s.max_tightness
        );
    }
    match &res.first_violation {
        None => Ok(EXIT_OK),
        Some(v) => {
            let path = dir.join("violation.json");
            fs::write(&path, serde_json::to_string_pretty(v)?)?;
            eprintln!(
                "violation: {} trial {}: lhs {:e} > bound {:e}; instance written to {}",
                v.suite,
                v.trial,
                v.report.lhs,
                v.report.bound,
                path.display()
            );
            Ok(EXIT_FAILURE)
        }
    }
}

/// Loads the policy, ensemble and world of a run directory.
pub fn load_checkpoint(dir: &Path) -> Result<(GameConfig, Env, GaussianPolicy, DynamicsEnsemble)> {
    let need = |name: &str| {
        let p = dir.join(name);
        if p.exists() {
            Ok(p)
        } else {
            Err(Error::Checkpoint(format!("{} is missing {name}", dir.display())))
        }
    };
    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(need(MANIFEST_FILE)?)?)?;
    let policy = GaussianPolicy::load(&need(POLICY_FILE)?)?;
    let ensemble = DynamicsEnsemble::load(&need(ENSEMBLE_FILE)?)?;
    let env = manifest.config.build_env();
    Ok((manifest.config, env, policy, ensemble))
}

pub fn cmd_diagnose(a: &DiagnoseArgs) -> Result<AmplificationProfile> {
    let (cfg, env, policy, ensemble) = load_checkpoint(&a.checkpoint_dir)?;
    let mut horizon = a.horizon;
    if horizon > env.horizon() {
        eprintln!("warning: horizon {horizon} exceeds the episode horizon {}; clamped", env.horizon());
        horizon = env.horizon();
    }
    let model = if a.exact_model { RolloutModel::Exact(&env) } else { RolloutModel::Learned(&ensemble) };
    let run = |mode| amplification_profile(&env, &policy, model, mode, horizon, a.n, a.seed);
    let empty = |mode| crate::verify::LoopProfile { mode, errors: vec![], truncated_at: None };
    let profile = AmplificationProfile {
        open_loop: if a.mode == ModeArg::Closed { empty(LoopMode::Open) } else { run(LoopMode::Open)? },
        closed_loop: if a.mode == ModeArg::Open { empty(LoopMode::Closed) } else { run(LoopMode::Closed)? },
    };
    for p in [&profile.open_loop, &profile.closed_loop] {
        if let Some(t) = p.truncated_at {
            eprintln!("warning: {:?}-loop model rollout diverged at t={t}; series truncated", p.mode);
        }
    }
    let out = a.out.clone().unwrap_or_else(|| a.checkpoint_dir.join("profile.csv"));
    let mut csv = Vec::new();
    profile.write_csv(&mut csv, &config_hash(&cfg))?;
    fs::write(&out, csv)?;
    let last = |v: &[f64]| v.last().map_or("-".to_string(), |x| format!("{x:.4e}"));
    println!(
        "L_open(T)={} L_closed(T)={} -> {}",
        last(&profile.open_loop.errors),
        last(&profile.closed_loop.errors),
        out.display()
    );
    Ok(profile)
}
