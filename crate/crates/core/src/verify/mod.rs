//! Exact certification of the model-error bounds on tabular MDPs, and error
//! amplification diagnostics for learned continuous models.

mod amplification;
mod bounds;
mod sweep;

pub use amplification::{amplification_profile, AmplificationProfile, LoopMode, LoopProfile, DIVERGENCE_NORM};
pub use bounds::{
    chain_of, check_error_amplification, check_performance_difference, check_simulation_lemma, check_theorem1,
    truncation_horizon, BoundId, BoundReport, ChainAmplification, CheckOptions, DomainVisitation, NamedValue, BOUND_TOL,
    TAIL_TARGET, VI_TOL,
};
pub use sweep::{replay, run_sweep, Instance, Suite, SuiteSummary, SweepConfig, SweepResult, TrialRecord, Violation};
