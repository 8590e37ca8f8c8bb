//! The four game solvers as configurations of one training loop.
//!
//! | solver | leader | policy step | model step | data kept |
//! |--------|--------|-------------|------------|-----------|
//! | PAL | policy | `K` small NPG steps on the freshly fitted model | fit on the buffer first | FIFO buffer of size `B` |
//! | MAL | model | `K >> 1` NPG steps on the current model | a few epochs on all data, after collecting | everything |
//! | GDA | none | one NPG step on the previous model | one epoch on the latest batch, applied together | latest batch |
//! | BR | none | `K >> 1` NPG steps on the previous model | full refit on the latest batch, applied together | latest batch |

mod config;
pub mod export;
mod log;

pub use config::{EvalConfig, GameConfig, MalModelStep, ModelConfig, Solver};
pub use log::{IterationRecord, RunSummary, TrainingLog, UpdateEvent, UpdateKind, CSV_SCHEMA_VERSION};

use std::time::Instant;

use crate::dynamics::{DynamicsEnsemble, ModelTrainConfig, ReplayBuffer, TrainReport};
use crate::envs::{rollout_episode, Actor, Env, Trajectory, Transition};
use crate::error::{Error, Result};
use crate::policy::{npg_iteration, GaussianPolicy, MeanActor, NpgStats, RolloutModel, ValueNet};
use crate::rng::{self, derive_seed, Stream};

/// Consecutive fully failed iterations tolerated before a run is aborted.
pub const MAX_CONSECUTIVE_FAILURES: usize = 5;

/// Everything a finished run leaves behind.
#[derive(Debug, Clone)]
pub struct GameRun {
    pub config: GameConfig,
    pub log: TrainingLog,
    pub policy: GaussianPolicy,
    pub value: ValueNet,
    pub ensemble: DynamicsEnsemble,
    /// The world at the end of the run (perturbations included).
    pub env: Env,
    pub buffer: ReplayBuffer,
}

impl GameRun {
    pub fn summary(&self) -> RunSummary {
        let last = self.log.last();
        RunSummary {
            solver: self.config.solver,
            seed: self.config.seed,
            samples_to_success: self.log.samples_to_success(self.config.eval.success_threshold),
            final_j: last.map_or(f64::NAN, |r| r.eval_discounted),
            final_success: last.map_or(f64::NAN, |r| r.success_rate),
            final_model_loss: last.map_or(f64::NAN, |r| r.model_train_loss),
            total_samples: last.map_or(0, |r| r.samples),
            iterations: self.log.records.len().saturating_sub(1),
        }
    }
}

/// Monte-Carlo performance of a policy in the world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub mean_return: f64,
    pub mean_discounted: f64,
    pub se_discounted: f64,
    pub success_rate: f64,
    pub final_distance: f64,
}

/// Evaluates on `episodes` episodes whose streams depend only on `seed`.
pub fn evaluate(env: &Env, actor: &dyn Actor, episodes: usize, gamma: f64, seed: u64) -> Result<Evaluation> {
    let mut ret = Vec::with_capacity(episodes);
    let mut disc = Vec::with_capacity(episodes);
    let mut succ = 0usize;
    let mut dist = 0.0;
    for i in 0..episodes {
        let mut r = rng::stream(seed, Stream::Evaluation, i as u64);
        let t = rollout_episode(env, actor, env.horizon(), &mut r)?;
        ret.push(t.total_reward());
        disc.push(t.discounted_return(gamma));
        succ += env.is_success(&t) as usize;
        dist += t.final_state().map_or(f64::NAN, |s| env.goal_distance(s));
    }
    let n = episodes as f64;
    let mean_d = disc.iter().sum::<f64>() / n;
    let var = if episodes > 1 { disc.iter().map(|d| (d - mean_d).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Ok(Evaluation {
        mean_return: ret.iter().sum::<f64>() / n,
        mean_discounted: mean_d,
        se_discounted: (var / n).sqrt(),
        success_rate: succ as f64 / n,
        final_distance: dist / n,
    })
}

#[derive(Default)]
struct StepTotals {
    synthetic_return: f64,
    kl: f64,
    norm_error: f64,
    updates: usize,
    divergences: usize,
    fallbacks: usize,
    failed: usize,
}

struct Game {
    cfg: GameConfig,
    env: Env,
    policy: GaussianPolicy,
    value: ValueNet,
    ensemble: DynamicsEnsemble,
    buffer: ReplayBuffer,
    log: TrainingLog,
    clock: u64,
    npg_counter: u64,
    model_counter: u64,
    last_model: Option<TrainReport>,
    model_failures: usize,
}

impl Game {
    fn new(cfg: &GameConfig) -> Result<Self> {
        cfg.validate()?;
        let env = cfg.build_env();
        let spec = env.spec();
        let policy = GaussianPolicy::new(spec.state_dim, spec.action_dim, &cfg.policy_hidden, &mut rng::stream(cfg.seed, Stream::Init, 0));
        let value = ValueNet::new(spec.state_dim, &cfg.value_hidden, &mut rng::stream(cfg.seed, Stream::Init, 1));
        let ensemble = DynamicsEnsemble::new(
            spec.state_dim,
            spec.action_dim,
            &cfg.model.hidden,
            cfg.model.ensemble_size,
            derive_seed(cfg.seed, Stream::ModelInit, 0),
        )?;
        let buffer = ReplayBuffer::new(match cfg.solver {
            Solver::Pal => cfg.buffer_capacity,
            _ => None,
        });
        Ok(Self {
            cfg: cfg.clone(),
            env,
            policy,
            value,
            ensemble,
            buffer,
            log: TrainingLog::default(),
            clock: 0,
            npg_counter: 0,
            model_counter: 0,
            last_model: None,
            model_failures: 0,
        })
    }

    fn event(&mut self, iteration: usize, kind: UpdateKind) {
        self.clock += 1;
        self.log.events.push(UpdateEvent { clock: self.clock, iteration, kind });
    }

    fn collect(&mut self, n: usize, iteration: usize) -> Result<Vec<Trajectory>> {
        let seed = derive_seed(self.cfg.seed, Stream::WorldData, iteration as u64);
        let trajs = crate::envs::collect_rollouts(&self.env, &self.policy, n, seed)?;
        self.event(iteration, UpdateKind::Collect);
        Ok(trajs)
    }

    /// Trains the ensemble; a non-finite loss restores the previous weights.
    fn fit_model(&mut self, data: &[Transition], train: &ModelTrainConfig, reinit: bool) -> Result<()> {
        if self.cfg.model.exact {
            return Ok(());
        }
        let seed = derive_seed(self.cfg.seed, Stream::ModelTrain, self.model_counter);
        self.model_counter += 1;
        let backup = self.ensemble.clone();
        if reinit {
            self.ensemble.reinitialize(seed);
        }
        match self.ensemble.train(data, train, seed) {
            Ok(rep) => {
                self.last_model = Some(rep);
                Ok(())
            }
            Err(Error::NonFinite(_)) => {
                self.ensemble = backup;
                self.model_failures += 1;
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    fn policy_steps(&mut self, k: usize, starts: &[Vec<f64>]) -> Result<StepTotals> {
        let mut tot = StepTotals::default();
        let exact_env = self.env.clone();
        for _ in 0..k {
            let model = if self.cfg.model.exact {
                RolloutModel::Exact(&exact_env)
            } else {
                RolloutModel::Learned(&self.ensemble)
            };
            let seed = derive_seed(self.cfg.seed, Stream::Synthetic, self.npg_counter);
            self.npg_counter += 1;
            let backup = (self.policy.clone(), self.value.clone());
            match npg_iteration(&mut self.policy, &mut self.value, model, &self.env, starts, &self.cfg.npg, seed) {
                Ok(s) => tot.absorb(&s, self.cfg.npg.step_size),
                Err(Error::NonFinite(_)) => {
                    (self.policy, self.value) = backup;
                    tot.failed += 1;
                    tot.divergences += 1;
                }
                Err(e) => return Err(e),
            }
        }
        Ok(tot)
    }

    fn record(&mut self, iteration: usize, samples: usize, order: &str, steps: StepTotals, perturbed: bool, t0: Instant) -> Result<()> {
        let eval_seed = derive_seed(self.cfg.seed, Stream::Evaluation, 0);
        let ev = if self.cfg.eval.deterministic {
            evaluate(&self.env, &MeanActor(&self.policy), self.cfg.eval.episodes, self.cfg.npg.gamma, eval_seed)?
        } else {
            evaluate(&self.env, &self.policy, self.cfg.eval.episodes, self.cfg.npg.gamma, eval_seed)?
        };
        let (train_loss, hold_loss) = match &self.last_model {
            Some(r) => (r.mean_train_loss(), r.mean_holdout_loss().unwrap_or(f64::NAN)),
            None => (f64::NAN, f64::NAN),
        };
        let n = steps.updates.max(1) as f64;
        self.log.records.push(IterationRecord {
            iteration,
            samples,
            eval_return: ev.mean_return,
            eval_discounted: ev.mean_discounted,
            eval_se: ev.se_discounted,
            success_rate: ev.success_rate,
            final_distance: ev.final_distance,
            synthetic_return: if steps.updates > 0 { steps.synthetic_return / n } else { f64::NAN },
            model_train_loss: train_loss,
            model_holdout_loss: hold_loss,
            npg_kl: if steps.updates > 0 { steps.kl / n } else { 0.0 },
            step_norm_error: steps.norm_error,
            npg_updates: steps.updates,
            divergences: steps.divergences + std::mem::take(&mut self.model_failures),
            cg_fallbacks: steps.fallbacks,
            order: order.to_string(),
            perturbed,
            wall_clock_secs: t0.elapsed().as_secs_f64(),
        });
        Ok(())
    }

    fn buffer_states(&self) -> Vec<Vec<f64>> {
        self.buffer.iter().map(|t| t.state.clone()).collect()
    }
}

impl StepTotals {
    fn absorb(&mut self, s: &NpgStats, delta: f64) {
        self.synthetic_return += s.synthetic_return;
        self.kl += s.kl;
        if !s.skipped && delta > 0.0 {
            self.norm_error = self.norm_error.max((s.quad_form - delta).abs() / delta);
        }
        self.updates += 1;
        self.divergences += s.divergences;
        self.fallbacks += s.fallback as usize;
    }
}

/// Runs the configured solver until the sample budget is spent.
pub fn run_game(cfg: &GameConfig) -> Result<GameRun> {
    let t0 = Instant::now();
    let mut g = Game::new(cfg)?;
    let cfg = g.cfg.clone();

    let init = g.collect(cfg.n_init, 0)?;
    g.buffer.insert_trajectories(&init);
    let mut samples = cfg.n_init;
    if cfg.solver != Solver::Pal {
        let data = g.buffer.to_vec();
        let train = ModelTrainConfig { epochs: cfg.model.initial_epochs, ..cfg.model.train.clone() };
        g.fit_model(&data, &train, false)?;
        g.event(0, UpdateKind::Model);
    }
    g.record(0, samples, "init", StepTotals::default(), false, t0)?;

    let mut perturbed = false;
    let mut consecutive_failures = 0;
    let mut iteration = 0;
    while samples + cfg.n_per_iter <= cfg.budget {
        iteration += 1;
        let mut perturbed_now = false;
        if let Some(p) = &cfg.perturbation {
            if !perturbed && samples > p.trigger_samples {
                g.env.perturb(p.kind, p.magnitude)?;
                g.event(iteration, UpdateKind::Perturbation);
                perturbed = true;
                perturbed_now = true;
            }
        }
        let (order, steps) = match cfg.solver {
            Solver::Pal => {
                let data = g.buffer.to_vec();
                g.fit_model(&data, &cfg.model.train, false)?;
                g.event(iteration, UpdateKind::Model);
                let starts = g.buffer_states();
                let steps = g.policy_steps(cfg.npg_steps, &starts)?;
                g.event(iteration, UpdateKind::Policy);
                let batch = g.collect(cfg.n_per_iter, iteration)?;
                g.buffer.insert_trajectories(&batch);
                ("model>policy", steps)
            }
            Solver::Mal => {
                let starts = g.buffer_states();
                let steps = g.policy_steps(cfg.npg_steps, &starts)?;
                g.event(iteration, UpdateKind::Policy);
                let batch = g.collect(cfg.n_per_iter, iteration)?;
                g.buffer.insert_trajectories(&batch);
                let data = g.buffer.to_vec();
                let train = match cfg.model.mal_step {
                    MalModelStep::Aggregate => cfg.model.train.clone(),
                    MalModelStep::BetaStep { beta } => ModelTrainConfig {
                        epochs: 1,
                        minibatch: data.len(),
                        lr: beta,
                        holdout_fraction: 0.0,
                        clamp_steps: false,
                        ..cfg.model.train.clone()
                    },
                };
                g.fit_model(&data, &train, false)?;
                g.event(iteration, UpdateKind::Model);
                ("policy>model", steps)
            }
            Solver::Gda | Solver::Br => {
                // both players respond to the same snapshot (pi_k, M_k, D_k)
                let latest = g.buffer.to_vec();
                let starts = g.buffer_states();
                let steps = g.policy_steps(cfg.npg_steps, &starts)?;
                g.fit_model(&latest, &cfg.model.train, cfg.solver == Solver::Br)?;
                g.event(iteration, UpdateKind::Simultaneous);
                let batch = g.collect(cfg.n_per_iter, iteration)?;
                g.buffer.clear();
                g.buffer.insert_trajectories(&batch);
                ("simultaneous", steps)
            }
        };
        samples += cfg.n_per_iter;
        if steps.failed == cfg.npg_steps && cfg.npg_steps > 0 {
            consecutive_failures += 1;
            if consecutive_failures >= MAX_CONSECUTIVE_FAILURES {
                return Err(Error::NonFinite(format!(
                    "model rollouts diverged in {consecutive_failures} consecutive iterations"
                )));
            }
        } else {
            consecutive_failures = 0;
        }
        g.record(iteration, samples, order, steps, perturbed_now, t0)?;
        if cfg.eval.stop_at_success && g.log.last().is_some_and(|r| r.success_rate >= cfg.eval.success_threshold) {
            break;
        }
    }

    Ok(GameRun {
        config: cfg,
        log: g.log,
        policy: g.policy,
        value: g.value,
        ensemble: g.ensemble,
        env: g.env,
        buffer: g.buffer,
    })
}

fn run_as(solver: Solver, cfg: &GameConfig) -> Result<GameRun> {
    if cfg.solver != solver {
        return Err(Error::Config { field: "solver".into(), message: format!("expected {solver}, got {}", cfg.solver) });
    }
    run_game(cfg)
}

pub fn run_pal(cfg: &GameConfig) -> Result<GameRun> {
    run_as(Solver::Pal, cfg)
}

pub fn run_mal(cfg: &GameConfig) -> Result<GameRun> {
    run_as(Solver::Mal, cfg)
}

pub fn run_gda(cfg: &GameConfig) -> Result<GameRun> {
    run_as(Solver::Gda, cfg)
}

pub fn run_br(cfg: &GameConfig) -> Result<GameRun> {
    run_as(Solver::Br, cfg)
}
