use serde::{Deserialize, Serialize};

use crate::dynamics::ModelTrainConfig;
use crate::envs::{Env, EnvName, GridConfig, Pendulum, PendulumConfig, PerturbationSchedule, PointReacher, ReacherConfig};
use crate::error::{Error, Result};
use crate::policy::NpgConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Pal,
    Mal,
    Gda,
    Br,
}

impl Solver {
    pub const ALL: [Solver; 4] = [Solver::Pal, Solver::Mal, Solver::Gda, Solver::Br];
}

impl std::fmt::Display for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Solver::Pal => "pal",
            Solver::Mal => "mal",
            Solver::Gda => "gda",
            Solver::Br => "br",
        })
    }
}

impl std::str::FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pal" => Ok(Solver::Pal),
            "mal" => Ok(Solver::Mal),
            "gda" => Ok(Solver::Gda),
            "br" => Ok(Solver::Br),
            other => Err(Error::Config {
                field: "solver".into(),
                message: format!("unknown solver `{other}` (expected pal, mal, gda or br)"),
            }),
        }
    }
}

/// How the model player's update is carried out in MAL.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MalModelStep {
    /// A few epochs over all aggregated data.
    #[default]
    Aggregate,
    /// A single full-batch gradient step with rate `beta` on all aggregated data.
    BetaStep { beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
    pub ensemble_size: usize,
    pub train: ModelTrainConfig,
    /// Epochs for the fit on the initial data (MAL, GDA, BR).
    pub initial_epochs: usize,
    /// Replace the learned ensemble by the world's own dynamics.
    pub exact: bool,
    pub mal_step: MalModelStep,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128, 128],
            ensemble_size: 4,
            train: ModelTrainConfig::default(),
            initial_epochs: 100,
            exact: false,
            mal_step: MalModelStep::Aggregate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub episodes: usize,
    /// Deploy the policy mean instead of sampling.
    pub deterministic: bool,
    /// Success rate that counts as solved.
    pub success_threshold: f64,
    /// End the run once the success threshold is met.
    pub stop_at_success: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { episodes: 50, deterministic: true, success_threshold: 0.9, stop_at_success: false }
    }
}

/// Fully resolved configuration of one solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub solver: Solver,
    pub env: EnvName,
    pub seed: u64,
    /// Total world samples, initial data included.
    pub budget: usize,
    pub n_init: usize,
    pub n_per_iter: usize,
    /// FIFO capacity for PAL; MAL keeps everything; GDA and BR keep the latest batch.
    pub buffer_capacity: Option<usize>,
    /// NPG steps per iteration.
    pub npg_steps: usize,
    pub policy_hidden: Vec<usize>,
    pub value_hidden: Vec<usize>,
    pub npg: NpgConfig,
    pub model: ModelConfig,
    pub eval: EvalConfig,
    #[serde(default)]
    pub perturbation: Option<PerturbationSchedule>,
    #[serde(default)]
    pub gridworld: GridConfig,
    #[serde(default)]
    pub reacher: ReacherConfig,
    #[serde(default)]
    pub pendulum: PendulumConfig,
}

impl GameConfig {
    /// Solver table values on top of desk defaults (policy 32x32, value 64x64, model 128x128).
    pub fn preset(solver: Solver, env: EnvName) -> Self {
        let horizon = Env::with_defaults(env).horizon();
        let mut cfg = GameConfig {
            solver,
            env,
            seed: 0,
            budget: 30_000,
            n_init: 2500,
            n_per_iter: (5 * horizon).min(1000),
            buffer_capacity: Some(2500),
            npg_steps: 4,
            policy_hidden: vec![32, 32],
            value_hidden: vec![64, 64],
            npg: NpgConfig::default(),
            model: ModelConfig::default(),
            eval: EvalConfig::default(),
            perturbation: None,
            gridworld: GridConfig::default(),
            reacher: ReacherConfig::default(),
            pendulum: PendulumConfig::default(),
        };
        match solver {
            Solver::Pal => {}
            Solver::Mal => cfg.apply_mal_table(horizon),
            Solver::Gda => {
                cfg.npg_steps = 1;
                cfg.buffer_capacity = None;
                cfg.model.train.epochs = 1;
                cfg.model.train.clamp_steps = false;
            }
            Solver::Br => {
                cfg.apply_mal_table(horizon);
                // the initial fit matches MAL so both share their first iteration
                cfg.model.train.epochs = 100;
            }
        }
        cfg
    }

    fn apply_mal_table(&mut self, horizon: usize) {
        self.n_init = 5000;
        self.n_per_iter = (20 * horizon).min(3000);
        self.buffer_capacity = None;
        self.npg_steps = 25;
        self.model.train.epochs = 10;
        self.model.initial_epochs = 10;
    }

    /// Preset table values with full-size network widths.
    pub fn full_scale(solver: Solver, env: EnvName) -> Self {
        let mut cfg = Self::preset(solver, env);
        cfg.policy_hidden = vec![64, 64];
        cfg.value_hidden = vec![128, 128];
        cfg.model.hidden = vec![512, 512];
        cfg
    }

    pub fn build_env(&self) -> Env {
        match self.env {
            EnvName::GridworldGoal => Env::GridworldGoal(crate::envs::GridWorld::new(self.gridworld.clone())),
            EnvName::PointReacher => Env::PointReacher(PointReacher::new(self.reacher.clone())),
            EnvName::Pendulum => Env::Pendulum(Pendulum::new(self.pendulum.clone())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: &str| Err(Error::Config { field: field.into(), message: message.into() });
        if self.n_init == 0 {
            return bad("n_init", "must be at least 1");
        }
        if self.n_per_iter == 0 {
            return bad("n_per_iter", "must be at least 1");
        }
        if self.budget < self.n_init {
            return bad("budget", "must cover the initial samples");
        }
        if self.buffer_capacity == Some(0) {
            return bad("buffer_capacity", "must be positive");
        }
        if self.model.ensemble_size == 0 {
            return bad("model.ensemble_size", "must be at least 1");
        }
        if self.eval.episodes == 0 {
            return bad("eval.episodes", "must be at least 1");
        }
        if let MalModelStep::BetaStep { beta } = self.model.mal_step {
            if !(beta > 0.0 && beta.is_finite()) {
                return bad("model.mal_step.beta", "must be positive");
            }
        }
        self.npg.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        let pal = GameConfig::preset(Solver::Pal, EnvName::PointReacher);
        assert_eq!((pal.n_init, pal.n_per_iter, pal.buffer_capacity, pal.npg_steps), (2500, 500, Some(2500), 4));
        assert_eq!((pal.model.train.epochs, pal.model.train.minibatch, pal.model.ensemble_size), (100, 200, 4));
        let mal = GameConfig::preset(Solver::Mal, EnvName::PointReacher);
        assert_eq!((mal.n_init, mal.n_per_iter, mal.buffer_capacity, mal.npg_steps), (5000, 2000, None, 25));
        assert_eq!(mal.model.train.epochs, 10);
        let mal_pendulum = GameConfig::preset(Solver::Mal, EnvName::Pendulum);
        assert_eq!(mal_pendulum.n_per_iter, 3000);
        let grid = GameConfig::preset(Solver::Pal, EnvName::GridworldGoal);
        assert_eq!(grid.n_per_iter, 100);
        let full = GameConfig::full_scale(Solver::Pal, EnvName::GridworldGoal);
        assert_eq!((full.policy_hidden, full.value_hidden, full.model.hidden), (vec![64, 64], vec![128, 128], vec![512, 512]));
        let npg = &pal.npg;
        assert_eq!((npg.gamma, npg.gae_lambda, npg.n_traj, npg.step_size), (0.995, 0.97, 200, 0.05));
    }

    #[test]
    fn unknown_solver_names_field() {
        match "foo".parse::<Solver>() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "solver"),
            other => panic!("{other:?}"),
        }
    }
}
