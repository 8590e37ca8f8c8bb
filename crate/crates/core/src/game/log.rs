use std::io::Write;

use serde::{Deserialize, Serialize};

use super::Solver;
use crate::error::Result;

/// Bumped whenever CSV columns change.
pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateKind {
    Model,
    Policy,
    /// Both players updated from the same snapshot.
    Simultaneous,
    Collect,
    Perturbation,
}

/// One entry of the logical update clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateEvent {
    pub clock: u64,
    pub iteration: usize,
    pub kind: UpdateKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// World transitions consumed for learning so far.
    pub samples: usize,
    pub eval_return: f64,
    pub eval_discounted: f64,
    /// Standard error of `eval_discounted` over evaluation episodes.
    pub eval_se: f64,
    pub success_rate: f64,
    /// Mean distance to goal at the end of evaluation episodes.
    pub final_distance: f64,
    pub synthetic_return: f64,
    pub model_train_loss: f64,
    pub model_holdout_loss: f64,
    pub npg_kl: f64,
    /// Largest `|dtheta^T (F + kI) dtheta - delta| / delta` over this iteration's steps.
    pub step_norm_error: f64,
    pub npg_updates: usize,
    pub divergences: usize,
    pub cg_fallbacks: usize,
    /// `model>policy`, `policy>model`, `simultaneous` or `init`.
    pub order: String,
    pub perturbed: bool,
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub records: Vec<IterationRecord>,
    pub events: Vec<UpdateEvent>,
}

const COLUMNS: [&str; 17] = [
    "iteration",
    "samples",
    "eval_return",
    "eval_discounted",
    "eval_se",
    "success_rate",
    "final_distance",
    "synthetic_return",
    "model_train_loss",
    "model_holdout_loss",
    "npg_kl",
    "step_norm_error",
    "npg_updates",
    "divergences",
    "cg_fallbacks",
    "order",
    "perturbed",
];

impl TrainingLog {
    /// First cumulative sample count at which the success rate reached `threshold`.
    pub fn samples_to_success(&self, threshold: f64) -> Option<usize> {
        self.records.iter().find(|r| r.success_rate >= threshold).map(|r| r.samples)
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// CSV without wall-clock columns, so identical runs give identical bytes.
    pub fn write_csv<W: Write>(&self, mut w: W, config_hash: &str) -> Result<()> {
        writeln!(w, "# schema={CSV_SCHEMA_VERSION} config={config_hash}")?;
        writeln!(w, "{}", COLUMNS.join(","))?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.iteration,
                r.samples,
                r.eval_return,
                r.eval_discounted,
                r.eval_se,
                r.success_rate,
                r.final_distance,
                r.synthetic_return,
                r.model_train_loss,
                r.model_holdout_loss,
                r.npg_kl,
                r.step_norm_error,
                r.npg_updates,
                r.divergences,
                r.cg_fallbacks,
                r.order,
                r.perturbed
            )?;
        }
        Ok(())
    }
}

/// End-of-run digest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub solver: Solver,
    pub seed: u64,
    pub samples_to_success: Option<usize>,
    #[serde(rename = "final_J")]
    pub final_j: f64,
    pub final_success: f64,
    pub final_model_loss: f64,
    pub total_samples: usize,
    pub iterations: usize,
}
