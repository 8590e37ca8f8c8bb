//! Randomized certification sweeps over small tabular instances.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::*;
use crate::error::{Error, Result};
use crate::mdp::random::{perturbed_model, random_distribution, random_mdp, random_policy, RandomMdpSpec};
use crate::mdp::{value_iteration, TabularMdp, TabularPolicy};
use crate::rng::{self, derive_seed, Rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Lemma1,
    Lemma2,
    Lemma3,
    Theorem1,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Lemma1, Suite::Lemma2, Suite::Lemma3, Suite::Theorem1];

    /// `all` expands to every suite.
    pub fn parse_list(s: &str) -> Result<Vec<Suite>> {
        match s {
            "all" => Ok(Self::ALL.to_vec()),
            "lemma1" => Ok(vec![Suite::Lemma1]),
            "lemma2" => Ok(vec![Suite::Lemma2]),
            "lemma3" => Ok(vec![Suite::Lemma3]),
            "theorem1" => Ok(vec![Suite::Theorem1]),
            other => Err(Error::Config {
                field: "suite".into(),
                message: format!("unknown suite `{other}` (expected lemma1, lemma2, lemma3, theorem1 or all)"),
            }),
        }
    }
}

impl std::fmt::Display for Suite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Suite::Lemma1 => "lemma1",
            Suite::Lemma2 => "lemma2",
            Suite::Lemma3 => "lemma3",
            Suite::Theorem1 => "theorem1",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub trials: usize,
    pub seed: u64,
    pub max_states: usize,
    pub max_actions: usize,
    /// Horizon of the chain-amplification check.
    pub chain_horizon: usize,
    pub options: CheckOptions,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { trials: 1000, seed: 1, max_states: 20, max_actions: 4, chain_horizon: 50, options: CheckOptions::default() }
    }
}

/// A checked instance, enough to replay the check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Instance {
    Mdp { world: TabularMdp, model: TabularMdp, policy: TabularPolicy },
    Chain { p1: Vec<f64>, p2: Vec<f64>, rho: Vec<f64>, horizon: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub suite: Suite,
    pub trial: usize,
    pub report: BoundReport,
    pub instance: Instance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub suite: Suite,
    pub trial: usize,
    pub report: BoundReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub suite: Suite,
    pub trials: usize,
    pub violations: usize,
    pub median_tightness: f64,
    pub max_tightness: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<SuiteSummary>,
    pub first_violation: Option<Violation>,
}

impl SweepResult {
    pub fn all_hold(&self) -> bool {
        self.first_violation.is_none()
    }

    /// `suite,trial,lhs,bound,tightness,holds,terms` with terms as `name=value;...`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "suite,trial,lhs,bound,tightness,holds,terms")?;
        for r in &self.records {
            let terms: Vec<String> = r.report.terms.iter().map(|t| format!("{}={:e}", t.name, t.value)).collect();
            writeln!(
                w,
                "{},{},{:e},{:e},{:e},{},{}",
                r.suite,
                r.trial,
                r.report.lhs,
                r.report.bound,
                r.report.tightness,
                r.report.holds,
                terms.join(";")
            )?;
        }
        Ok(())
    }
}

/// Runs the check for `suite` on `instance`.
pub fn replay(suite: Suite, instance: &Instance, opts: &CheckOptions) -> Result<BoundReport> {
    match (suite, instance) {
        (Suite::Lemma1, Instance::Mdp { world, model, policy }) => check_simulation_lemma(world, model, policy, opts),
        (Suite::Lemma3, Instance::Mdp { world, model, policy }) => check_performance_difference(world, model, policy, opts),
        (Suite::Theorem1, Instance::Mdp { world, model, policy }) => check_theorem1(world, model, policy, opts),
        (Suite::Lemma2, Instance::Chain { p1, p2, rho, horizon }) => {
            Ok(check_error_amplification(p1, p2, rho, *horizon, opts)?.1)
        }
        _ => Err(Error::InvalidInput(format!("instance kind does not match suite {suite}"))),
    }
}

fn random_model(r: &mut Rng, world: &TabularMdp) -> TabularMdp {
    match r.gen_range(0..4) {
        // mixtures keep full support
        0 | 1 => {
            let mix = r.gen_range(0.0..1.0);
            perturbed_model(r, world, mix)
        }
        // a few rows replaced
        2 => {
            let (n, k) = (world.n_states(), world.n_actions());
            let mut p = world.transitions().to_vec();
            for s in 0..n {
                if r.gen_bool(0.3) {
                    for a in 0..k {
                        let row = random_distribution(r, n, 0.5);
                        p[(s * k + a) * n..(s * k + a + 1) * n].copy_from_slice(&row);
                    }
                }
            }
            world.with_transitions(p).expect("rows are stochastic")
        }
        // unrelated, possibly with disjoint support
        _ => {
            let other = random_mdp(r, &RandomMdpSpec { n_states: world.n_states(), n_actions: world.n_actions(), gamma: Some(world.gamma()), sparsity: 0.5 });
            world.with_transitions(other.transitions().to_vec()).expect("rows are stochastic")
        }
    }
}

fn random_instance(suite: Suite, cfg: &SweepConfig, r: &mut Rng) -> Result<Instance> {
    let n = r.gen_range(2..=cfg.max_states.max(2));
    let k = r.gen_range(1..=cfg.max_actions.max(1));
    let sparsity = if r.gen_bool(0.5) { 0.0 } else { r.gen_range(0.0..0.8) };
    let world = random_mdp(r, &RandomMdpSpec { n_states: n, n_actions: k, gamma: None, sparsity });
    let model = random_model(r, &world);
    let policy = match r.gen_range(0..3) {
        0 if suite == Suite::Theorem1 => value_iteration(&model, VI_TOL)?.0,
        1 if suite == Suite::Theorem1 => {
            // near-greedy in the world
            let (opt, _) = value_iteration(&world, VI_TOL)?;
            let noise = random_policy(r, n, k);
            let mix = r.gen_range(0.0..0.3);
            let probs: Vec<f64> = (0..n)
                .flat_map(|s| (0..k).map(|a| (1.0 - mix) * opt.prob(s, a) + mix * noise.prob(s, a)).collect::<Vec<_>>())
                .collect();
            let mut rows: Vec<Vec<f64>> = probs.chunks(k).map(|c| c.to_vec()).collect();
            rows.iter_mut().for_each(|row| crate::mdp::random::fix_sum(row));
            TabularPolicy::from_rows(&rows)?
        }
        _ => random_policy(r, n, k),
    };
    Ok(match suite {
        Suite::Lemma2 => Instance::Chain {
            p1: chain_of(&world, &policy)?,
            p2: chain_of(&model, &policy)?,
            rho: world.rho().to_vec(),
            horizon: cfg.chain_horizon,
        },
        _ => Instance::Mdp { world, model, policy },
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Checks `cfg.trials` random instances per suite. Instance `i` of a suite
/// depends only on `(seed, suite, i)`.
pub fn run_sweep(suites: &[Suite], cfg: &SweepConfig) -> Result<SweepResult> {
    if cfg.trials == 0 {
        return Err(Error::Config { field: "trials".into(), message: "must be at least 1".into() });
    }
    let mut out = SweepResult::default();
    for &suite in suites {
        let suite_seed = derive_seed(cfg.seed, Stream::Sweep, suite as u64);
        let results: Vec<(BoundReport, Instance)> = (0..cfg.trials)
            .into_par_iter()
            .map(|i| {
                let mut r = rng::stream(suite_seed, Stream::Sweep, i as u64);
                let inst = random_instance(suite, cfg, &mut r)?;
                Ok((replay(suite, &inst, &cfg.options)?, inst))
            })
            .collect::<Result<_>>()?;
        let mut violations = 0;
        for (trial, (report, inst)) in results.into_iter().enumerate() {
            if !report.holds {
                violations += 1;
                if out.first_violation.is_none() {
                    out.first_violation = Some(Violation { suite, trial, report: report.clone(), instance: inst });
                }
            }
            out.records.push(TrialRecord { suite, trial, report });
        }
        let tight: Vec<f64> = out.records.iter().filter(|r| r.suite == suite).map(|r| r.report.tightness).collect();
        out.summaries.push(SuiteSummary {
            suite,
            trials: cfg.trials,
            violations,
            max_tightness: tight.iter().cloned().fold(0.0, f64::max),
            median_tightness: median(tight),
        });
    }
    Ok(out)
}
