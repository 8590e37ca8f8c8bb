use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Normalizer;
use crate::envs::Transition;
use crate::error::{Error, Result};
use crate::nn::{checkpoint, Activation, Adam, Mlp};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelTrainConfig {
    pub epochs: usize,
    pub minibatch: usize,
    pub lr: f64,
    /// Fraction of the data held out for loss reporting.
    pub holdout_fraction: f64,
    pub min_steps: usize,
    pub max_steps: usize,
    /// Clamp the total number of gradient steps to `[min_steps, max_steps]`.
    pub clamp_steps: bool,
}

impl Default for ModelTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            minibatch: 200,
            lr: 1e-3,
            holdout_fraction: 0.1,
            min_steps: 100,
            max_steps: 100_000,
            clamp_steps: true,
        }
    }
}

impl ModelTrainConfig {
    /// `(gradient steps, effective minibatch)` for a training set of size `n_train`.
    pub fn schedule(&self, n_train: usize) -> (usize, usize) {
        let mb = self.minibatch.clamp(1, n_train.max(1));
        let steps = self.epochs * n_train.div_ceil(mb);
        if self.clamp_steps {
            (steps.clamp(self.min_steps, self.max_steps), mb)
        } else {
            (steps, mb)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub steps: usize,
    pub minibatch: usize,
    pub n_train: usize,
    pub n_holdout: usize,
    /// Per member, mean minibatch loss over each pass through the training set.
    pub loss_history: Vec<Vec<f64>>,
    /// Per member, loss on the full training split after training.
    pub train_loss: Vec<f64>,
    /// Per member, loss on the held-out split (empty when nothing was held out).
    pub holdout_loss: Vec<f64>,
}

impl TrainReport {
    pub fn mean_train_loss(&self) -> f64 {
        mean(&self.train_loss)
    }

    pub fn mean_holdout_loss(&self) -> Option<f64> {
        (!self.holdout_loss.is_empty()).then(|| mean(&self.holdout_loss))
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Ensemble of one-step models `s' = s + sigma_delta * net(norm(s), norm(a))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsEnsemble {
    members: Vec<Mlp>,
    normalizer: Option<Normalizer>,
    state_dim: usize,
    action_dim: usize,
    hidden: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct EnsembleHeader {
    state_dim: usize,
    action_dim: usize,
    hidden: Vec<usize>,
    n_members: usize,
    normalizer: Option<Normalizer>,
}

fn sizes(state_dim: usize, action_dim: usize, hidden: &[usize]) -> Vec<usize> {
    let mut s = vec![state_dim + action_dim];
    s.extend_from_slice(hidden);
    s.push(state_dim);
    s
}

impl DynamicsEnsemble {
    /// Members are seeded independently and start as the identity map (zero output layer).
    pub fn new(state_dim: usize, action_dim: usize, hidden: &[usize], n_members: usize, seed: u64) -> Result<Self> {
        if n_members == 0 {
            return Err(Error::InvalidInput("ensemble needs at least one member".into()));
        }
        let mut e = Self { members: Vec::new(), normalizer: None, state_dim, action_dim, hidden: hidden.to_vec() };
        e.members = (0..n_members).map(|i| e.fresh_member(seed, i)).collect();
        Ok(e)
    }

    fn fresh_member(&self, seed: u64, i: usize) -> Mlp {
        let mut r = rng::stream(seed, Stream::ModelInit, i as u64);
        let mut net = Mlp::new(&sizes(self.state_dim, self.action_dim, &self.hidden), Activation::Relu, &mut r);
        net.scale_output_layer(0.0);
        net
    }

    /// Discards learned weights (the normalizer is kept until the next fit).
    pub fn reinitialize(&mut self, seed: u64) {
        self.members = (0..self.members.len()).map(|i| self.fresh_member(seed, i)).collect();
    }

    pub fn n_members(&self) -> usize {
        self.members.len()
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn members(&self) -> &[Mlp] {
        &self.members
    }

    pub fn member_mut(&mut self, i: usize) -> &mut Mlp {
        &mut self.members[i]
    }

    pub fn normalizer(&self) -> Option<&Normalizer> {
        self.normalizer.as_ref()
    }

    pub fn set_normalizer(&mut self, normalizer: Normalizer) -> Result<()> {
        if normalizer.state_dim() != self.state_dim || normalizer.action_dim() != self.action_dim {
            return Err(Error::DimensionMismatch { expected: self.state_dim, actual: normalizer.state_dim() });
        }
        self.normalizer = Some(normalizer);
        Ok(())
    }

    pub fn predict(&self, member: usize, state: &[f64], action: &[f64]) -> Result<Vec<f64>> {
        let norm = self.normalizer.as_ref().ok_or(Error::UnfittedNormalizer)?;
        if state.len() != self.state_dim {
            return Err(Error::DimensionMismatch { expected: self.state_dim, actual: state.len() });
        }
        if action.len() != self.action_dim {
            return Err(Error::DimensionMismatch { expected: self.action_dim, actual: action.len() });
        }
        let out = self.members[member].forward(&norm.input(state, action))?;
        Ok(state.iter().zip(&out).zip(&norm.delta_scale).map(|((s, o), d)| s + d * o).collect())
    }

    /// Mean squared normalized-delta error of one member.
    pub fn loss(&self, member: usize, data: &[Transition]) -> Result<f64> {
        let norm = self.normalizer.as_ref().ok_or(Error::UnfittedNormalizer)?;
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let (inputs, targets) = encode(norm, data);
        let idx: Vec<usize> = (0..data.len()).collect();
        dataset_loss(&self.members[member], &inputs, &targets, &idx)
    }

    /// Refits the normalizer on `data` and trains every member with Adam.
    pub fn train(&mut self, data: &[Transition], cfg: &ModelTrainConfig, seed: u64) -> Result<TrainReport> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let norm = Normalizer::fit(data)?;
        self.set_normalizer(norm.clone())?;
        let (inputs, targets) = encode(&norm, data);

        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut rng::stream(seed, Stream::ModelTrain, 0));
        let n_holdout = if data.len() >= 10 { (data.len() as f64 * cfg.holdout_fraction).floor() as usize } else { 0 };
        let (holdout, train) = order.split_at(n_holdout);
        let (steps, mb) = cfg.schedule(train.len());

        let results: Vec<Result<(Vec<f64>, f64, Option<f64>)>> = self
            .members
            .par_iter_mut()
            .enumerate()
            .map(|(i, net)| {
                let mut r = rng::stream(seed, Stream::ModelTrain, 1 + i as u64);
                let history = fit_member(net, &inputs, &targets, train, steps, mb, cfg.lr, &mut r, i)?;
                let train_loss = dataset_loss(net, &inputs, &targets, train)?;
                let hold = if holdout.is_empty() { None } else { Some(dataset_loss(net, &inputs, &targets, holdout)?) };
                Ok((history, train_loss, hold))
            })
            .collect();

        let mut report = TrainReport {
            steps,
            minibatch: mb,
            n_train: train.len(),
            n_holdout,
            loss_history: Vec::new(),
            train_loss: Vec::new(),
            holdout_loss: Vec::new(),
        };
        for r in results {
            let (h, t, ho) = r?;
            report.loss_history.push(h);
            report.train_loss.push(t);
            report.holdout_loss.extend(ho);
        }
        Ok(report)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let header = EnsembleHeader {
            state_dim: self.state_dim,
            action_dim: self.action_dim,
            hidden: self.hidden.clone(),
            n_members: self.members.len(),
            normalizer: self.normalizer.clone(),
        };
        let params: Vec<f64> = self.members.iter().flat_map(|m| m.params().iter().copied()).collect();
        checkpoint::write(path, &header, &params)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (h, params): (EnsembleHeader, Vec<f64>) = checkpoint::read(path)?;
        let sz = sizes(h.state_dim, h.action_dim, &h.hidden);
        let per = Mlp::zeros(&sz, Activation::Relu).n_params();
        if h.n_members == 0 || params.len() != per * h.n_members {
            return Err(Error::Checkpoint(format!("{}: expected {} parameters", path.display(), per * h.n_members)));
        }
        let members = params
            .chunks_exact(per)
            .map(|c| Mlp::from_params(&sz, Activation::Relu, c.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { members, normalizer: h.normalizer, state_dim: h.state_dim, action_dim: h.action_dim, hidden: h.hidden })
    }
}

fn encode(norm: &Normalizer, data: &[Transition]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    data.iter().map(|t| (norm.input(&t.state, &t.action), norm.delta_target(&t.state, &t.next_state))).unzip()
}

fn dataset_loss(net: &Mlp, inputs: &[Vec<f64>], targets: &[Vec<f64>], idx: &[usize]) -> Result<f64> {
    if idx.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for &i in idx {
        let out = net.forward(&inputs[i])?;
        total += out.iter().zip(&targets[i]).map(|(o, t)| (o - t) * (o - t)).sum::<f64>();
    }
    Ok(total / (idx.len() * net.output_dim()) as f64)
}

#[allow(clippy::too_many_arguments)]
fn fit_member(
    net: &mut Mlp,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    train: &[usize],
    steps: usize,
    mb: usize,
    lr: f64,
    r: &mut rng::Rng,
    member: usize,
) -> Result<Vec<f64>> {
    let mut adam = Adam::new(net.n_params(), lr);
    let mut grad = vec![0.0; net.n_params()];
    let mut order = train.to_vec();
    let mut cursor = order.len();
    let per_pass = train.len().div_ceil(mb);
    let mut history = Vec::new();
    let mut pass_loss = 0.0;
    let mut pass_batches = 0;
    let d = net.output_dim();
    for step in 0..steps {
        if cursor >= order.len() {
            order.shuffle(r);
            cursor = 0;
        }
        let batch = &order[cursor..(cursor + mb).min(order.len())];
        cursor += batch.len();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let scale = 2.0 / (batch.len() * d) as f64;
        let mut loss = 0.0;
        for &i in batch {
            let cache = net.forward_cached(&inputs[i])?;
            let diff: Vec<f64> = cache.output().iter().zip(&targets[i]).map(|(o, t)| o - t).collect();
            loss += diff.iter().map(|x| x * x).sum::<f64>();
            let upstream: Vec<f64> = diff.iter().map(|x| x * scale).collect();
            net.backward(&cache, &upstream, &mut grad)?;
        }
        loss /= (batch.len() * d) as f64;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("model loss (member {member}, step {step})")));
        }
        adam.step(net.params_mut(), &grad)?;
        pass_loss += loss;
        pass_batches += 1;
        if pass_batches == per_pass {
            history.push(pass_loss / pass_batches as f64);
            pass_loss = 0.0;
            pass_batches = 0;
        }
    }
    if pass_batches > 0 {
        history.push(pass_loss / pass_batches as f64);
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn tr(s: Vec<f64>, a: Vec<f64>, n: Vec<f64>) -> Transition {
        Transition { t: 0, state: s, action: a, reward: 0.0, next_state: n, done: false }
    }

    fn linear_data(n: usize, seed: u64) -> Vec<Transition> {
        let mut r = rng::from_seed(seed);
        (0..n)
            .map(|_| {
                let s: f64 = r.gen_range(-1.0..1.0);
                let a: f64 = r.gen_range(-1.0..1.0);
                tr(vec![s], vec![a], vec![0.9 * s + 0.1 * a])
            })
            .collect()
    }

    #[test]
    fn fresh_member_is_identity() {
        let mut e = DynamicsEnsemble::new(3, 2, &[16, 16], 2, 0).unwrap();
        assert!(matches!(e.predict(0, &[0.0; 3], &[0.0; 2]), Err(Error::UnfittedNormalizer)));
        e.set_normalizer(Normalizer {
            state_mean: vec![0.3; 3],
            state_scale: vec![2.0; 3],
            action_mean: vec![0.0; 2],
            action_scale: vec![1.0; 2],
            delta_scale: vec![0.5; 3],
        })
        .unwrap();
        let s = [0.1, -4.0, 2.5];
        assert_eq!(e.predict(1, &s, &[0.7, -0.2]).unwrap(), s.to_vec());
    }

    #[test]
    fn zero_delta_scale_freezes_state() {
        let mut e = DynamicsEnsemble::new(2, 1, &[8], 1, 3).unwrap();
        let mut r = rng::from_seed(1);
        e.member_mut(0).params_mut().iter_mut().for_each(|p| *p = r.gen_range(-1.0..1.0));
        e.set_normalizer(Normalizer {
            state_mean: vec![0.0; 2],
            state_scale: vec![1.0; 2],
            action_mean: vec![0.0],
            action_scale: vec![1.0],
            delta_scale: vec![0.0; 2],
        })
        .unwrap();
        assert_eq!(e.predict(0, &[1.0, 2.0], &[0.5]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn hand_set_linear_model() {
        // no hidden layer: net(x) = w . x + b on (norm s, norm a)
        let mut e = DynamicsEnsemble::new(1, 1, &[], 1, 0).unwrap();
        e.member_mut(0).set_params(&[0.5, -1.0, 0.25]).unwrap();
        e.set_normalizer(Normalizer {
            state_mean: vec![1.0],
            state_scale: vec![2.0],
            action_mean: vec![0.0],
            action_scale: vec![0.5],
            delta_scale: vec![0.1],
        })
        .unwrap();
        // s = 3, a = 0.5: x = (1, 1), net = 0.5 - 1 + 0.25 = -0.25, s' = 3 - 0.025
        assert!((e.predict(0, &[3.0], &[0.5]).unwrap()[0] - 2.975).abs() < 1e-15);
        // loss on one transition with s' = 3: target 0, error 0.25^2
        let l = e.loss(0, &[tr(vec![3.0], vec![0.5], vec![3.0])]).unwrap();
        assert!((l - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn identity_dynamics_loss_is_zero() {
        let data: Vec<Transition> = (0..200).map(|i| tr(vec![i as f64, 1.0], vec![0.3], vec![i as f64, 1.0])).collect();
        let mut e = DynamicsEnsemble::new(2, 1, &[16, 16], 2, 0).unwrap();
        let rep = e.train(&data, &ModelTrainConfig { epochs: 1, ..Default::default() }, 0).unwrap();
        assert!(rep.train_loss.iter().all(|l| *l < 1e-8));
    }

    #[test]
    fn step_clamp_and_minibatch_shrink() {
        let cfg = ModelTrainConfig { epochs: 100, minibatch: 200, ..Default::default() };
        assert_eq!(cfg.schedule(50), (100, 50));
        assert_eq!(cfg.schedule(2250), (1200, 200));
        let huge = ModelTrainConfig { epochs: 10_000, minibatch: 1, ..Default::default() };
        assert_eq!(huge.schedule(50), (100_000, 1));
        let gda = ModelTrainConfig { epochs: 1, clamp_steps: false, ..Default::default() };
        assert_eq!(gda.schedule(450), (3, 200));

        let data = linear_data(50, 2);
        let mut e = DynamicsEnsemble::new(1, 1, &[8], 1, 0).unwrap();
        let rep = e.train(&data, &ModelTrainConfig { epochs: 1, ..Default::default() }, 0).unwrap();
        assert_eq!(rep.n_holdout, 5);
        assert_eq!((rep.steps, rep.minibatch), (100, 45));
    }

    #[test]
    fn learns_linear_system() {
        let data = linear_data(1000, 7);
        let mut e = DynamicsEnsemble::new(1, 1, &[32, 32], 1, 1).unwrap();
        let cfg = ModelTrainConfig { epochs: 300, minibatch: 100, lr: 3e-3, ..Default::default() };
        e.train(&data, &cfg, 1).unwrap();
        let test = linear_data(500, 99);
        let mse: f64 = test
            .iter()
            .map(|t| (e.predict(0, &t.state, &t.action).unwrap()[0] - t.next_state[0]).powi(2))
            .sum::<f64>()
            / test.len() as f64;
        assert!(mse.sqrt() < 1e-3, "rmse {}", mse.sqrt());
    }

    #[test]
    fn members_share_seed_or_differ() {
        let data = linear_data(200, 3);
        let mut a = DynamicsEnsemble::new(1, 1, &[8], 2, 5).unwrap();
        let mut b = a.clone();
        let cfg = ModelTrainConfig { epochs: 5, ..Default::default() };
        a.train(&data, &cfg, 11).unwrap();
        b.train(&data, &cfg, 11).unwrap();
        assert_eq!(a, b);
        let p0 = a.predict(0, &[0.4], &[-0.3]).unwrap()[0];
        let p1 = a.predict(1, &[0.4], &[-0.3]).unwrap()[0];
        assert!(p0 != p1);
    }

    #[test]
    fn scale_invariant_training() {
        let data = linear_data(300, 4);
        let scaled: Vec<Transition> = data
            .iter()
            .map(|t| tr(t.state.iter().map(|v| v * 10.0).collect(), t.action.clone(), t.next_state.iter().map(|v| v * 10.0).collect()))
            .collect();
        let cfg = ModelTrainConfig { epochs: 3, ..Default::default() };
        let mut a = DynamicsEnsemble::new(1, 1, &[8], 1, 0).unwrap();
        let mut b = a.clone();
        let ra = a.train(&data, &cfg, 2).unwrap();
        let rb = b.train(&scaled, &cfg, 2).unwrap();
        for (x, y) in ra.loss_history[0].iter().zip(&rb.loss_history[0]) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1e-12), "{x} vs {y}");
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let data = linear_data(100, 3);
        let mut e = DynamicsEnsemble::new(1, 1, &[8], 3, 5).unwrap();
        e.train(&data, &ModelTrainConfig { epochs: 1, ..Default::default() }, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("model.ckpt");
        e.save(&p).unwrap();
        assert_eq!(DynamicsEnsemble::load(&p).unwrap(), e);
    }
}
