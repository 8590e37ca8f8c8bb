//! Independent oracles shared by the integration and acceptance targets.
//!
//! Nothing here calls the library's solvers; each oracle recomputes its quantity by
//! a different route (enumeration, truncated series, finite differences).
#![allow(dead_code)]

use mbrl_game::mdp::{TabularMdp, TabularPolicy};
use mbrl_game::nn::{gaussian_log_density, gaussian_score, Activation, Mlp};
use mbrl_game::policy::{policy_gradient, GaussianPolicy, ValueNet};
use mbrl_game::rng;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

/// Dense Gauss-Jordan with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        let d = a[c][c];
        assert!(d.abs() > 1e-300, "singular system");
        for r in 0..n {
            if r != c {
                let f = a[r][c] / d;
                if f != 0.0 {
                    for k in c..n {
                        a[r][k] -= f * a[c][k];
                    }
                    b[r] -= f * b[c];
                }
            }
        }
    }
    (0..n).map(|i| b[i] / a[i][i]).collect()
}

/// `V^pi` for a deterministic policy given as one action per state.
pub fn deterministic_values(mdp: &TabularMdp, actions: &[usize]) -> Vec<f64> {
    let n = mdp.n_states();
    let g = mdp.gamma();
    let a: Vec<Vec<f64>> = (0..n)
        .map(|s| {
            let row = mdp.row(s, actions[s]);
            (0..n).map(|j| if s == j { 1.0 } else { 0.0 } - g * row[j]).collect()
        })
        .collect();
    solve(a, mdp.rewards().to_vec())
}

/// Enumerates every deterministic stationary policy; returns the per-state maximum
/// value and the maximum performance `rho . V`.
pub fn brute_force(mdp: &TabularMdp) -> (Vec<f64>, f64) {
    let (n, k) = (mdp.n_states(), mdp.n_actions());
    let total = k.pow(n as u32);
    let mut best_v = vec![f64::NEG_INFINITY; n];
    let mut best_j = f64::NEG_INFINITY;
    let mut actions = vec![0usize; n];
    for code in 0..total {
        let mut c = code;
        for a in actions.iter_mut() {
            *a = c % k;
            c /= k;
        }
        let v = deterministic_values(mdp, &actions);
        for (b, x) in best_v.iter_mut().zip(&v) {
            *b = b.max(*x);
        }
        best_j = best_j.max(mdp.rho().iter().zip(&v).map(|(r, x)| r * x).sum());
    }
    (best_v, best_j)
}

/// `(1 - gamma) sum_t gamma^t rho^T P_pi^t`, truncated once `gamma^t < tail`.
pub fn series_visitation(mdp: &TabularMdp, pi: &TabularPolicy, tail: f64) -> Vec<f64> {
    let n = mdp.n_states();
    let g = mdp.gamma();
    let mut dist = mdp.rho().to_vec();
    let mut acc = vec![0.0; n];
    let mut w = 1.0 - g;
    let mut gt = 1.0;
    while gt >= tail {
        for (a, d) in acc.iter_mut().zip(&dist) {
            *a += w * d;
        }
        let mut next = vec![0.0; n];
        for s in 0..n {
            for a in 0..mdp.n_actions() {
                let p = pi.prob(s, a) * dist[s];
                if p == 0.0 {
                    continue;
                }
                for (x, q) in next.iter_mut().zip(mdp.row(s, a)) {
                    *x += p * q;
                }
            }
        }
        dist = next;
        w *= g;
        gt *= g;
    }
    acc
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `||a - b|| / max(||a||, ||b||, floor)`.
pub fn rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(a).max(norm(b)).max(floor)
}

/// Central differences of `f` at `x`.
pub fn central_diff<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + h;
            let up = f(&p);
            p[i] = x[i] - h;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

const FD_STEP: f64 = 1e-5;
const FD_FLOOR: f64 = 1e-8;

fn random_vec(r: &mut rng::Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(-scale..scale)).collect()
}

/// Random tanh MLP, random input and output weights `c`; gradient of `c . f(x)` with
/// respect to parameters and input. Returns the worse of the two relative errors.
pub fn mlp_gradient_error(seed: u64) -> f64 {
    let mut r = rng::from_seed(seed);
    let mut sizes = vec![r.gen_range(1..6)];
    for _ in 0..r.gen_range(0..3) {
        sizes.push(r.gen_range(1..9));
    }
    sizes.push(r.gen_range(1..4));
    let act = if r.gen_bool(0.5) { Activation::Tanh } else { Activation::Identity };
    let net = Mlp::new(&sizes, act, &mut r);
    let x = random_vec(&mut r, sizes[0], 2.0);
    let c = random_vec(&mut r, *sizes.last().unwrap(), 1.0);

    let cache = net.forward_cached(&x).unwrap();
    let mut gp = vec![0.0; net.n_params()];
    let gx = net.backward(&cache, &c, &mut gp).unwrap();

    let out = |n: &Mlp, x: &[f64]| n.forward(x).unwrap().iter().zip(&c).map(|(a, b)| a * b).sum::<f64>();
    let fd_p = central_diff(
        |p| {
            let mut m = net.clone();
            m.set_params(p).unwrap();
            out(&m, &x)
        },
        net.params(),
        FD_STEP,
    );
    let fd_x = central_diff(|xx| out(&net, xx), &x, FD_STEP);
    rel_err(&gp, &fd_p, FD_FLOOR).max(rel_err(&gx, &fd_x, FD_FLOOR))
}

/// Gaussian log-density score with respect to `(mean, log_std)`.
pub fn score_gradient_error(seed: u64) -> f64 {
    let mut r = rng::from_seed(seed);
    let d = r.gen_range(1..5);
    let mean = random_vec(&mut r, d, 1.0);
    let log_std = random_vec(&mut r, d, 1.0);
    let action: Vec<f64> = mean.iter().zip(&log_std).map(|(m, l)| m + l.exp() * r.gen_range(-2.0..2.0)).collect();
    let (dm, ds) = gaussian_score(&action, &mean, &log_std);
    let mut analytic = dm;
    analytic.extend(ds);
    let mut x = mean.clone();
    x.extend(&log_std);
    let fd = central_diff(|p| gaussian_log_density(&action, &p[..d], &p[d..]), &x, FD_STEP);
    rel_err(&analytic, &fd, FD_FLOOR)
}

/// Minibatch MSE gradient used by the value fit.
pub fn value_fit_gradient_error(seed: u64) -> f64 {
    let mut r = rng::from_seed(seed);
    let dim = r.gen_range(1..6);
    let hidden: Vec<usize> = (0..r.gen_range(1..3)).map(|_| r.gen_range(2..9)).collect();
    let v = ValueNet::new(dim, &hidden, &mut r);
    let n = r.gen_range(1..20);
    let states: Vec<Vec<f64>> = (0..n).map(|_| random_vec(&mut r, dim, 2.0)).collect();
    let targets = random_vec(&mut r, n, 3.0);
    let batch: Vec<usize> = (0..n).filter(|_| r.gen_bool(0.7)).collect();
    let batch = if batch.is_empty() { vec![0] } else { batch };
    let mut g = vec![0.0; v.net.n_params()];
    v.batch_gradient(&states, &targets, &batch, &mut g).unwrap();
    let mut scratch = vec![0.0; g.len()];
    let fd = central_diff(
        |p| {
            let mut w = v.clone();
            w.net.set_params(p).unwrap();
            w.batch_gradient(&states, &targets, &batch, &mut scratch).unwrap()
        },
        v.net.params(),
        FD_STEP,
    );
    rel_err(&g, &fd, FD_FLOOR)
}

/// One-state Gaussian bandit with reward `-(a - target)^2`.
///
/// Compares `policy_gradient` (score function, mean baseline) against central finite
/// differences of the reparameterized sample mean on the same normal draws.
pub fn bandit_gradient_error(seed: u64, n: usize) -> f64 {
    let mut r = rng::from_seed(seed);
    let policy = GaussianPolicy::new(1, 1, &[4], &mut r);
    let target = r.gen_range(0.5..1.5);
    let state = vec![1.0];
    let eps: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut r)).collect();
    let reward = |a: f64| -(a - target) * (a - target);

    let mu = policy.mean_action(&state).unwrap()[0];
    let sigma = policy.std()[0];
    let actions: Vec<Vec<f64>> = eps.iter().map(|e| vec![mu + sigma * e]).collect();
    let rewards: Vec<f64> = actions.iter().map(|a| reward(a[0])).collect();
    let baseline = rewards.iter().sum::<f64>() / n as f64;
    let adv: Vec<f64> = rewards.iter().map(|x| x - baseline).collect();
    let states = vec![state.clone(); n];
    let g = policy_gradient(&policy, &states, &actions, &adv).unwrap();

    let fd = central_diff(
        |p| {
            let mut q = policy.clone();
            q.set_params(p).unwrap();
            let m = q.mean_action(&state).unwrap()[0];
            let s = q.std()[0];
            eps.iter().map(|e| reward(m + s * e)).sum::<f64>() / n as f64
        },
        &policy.params(),
        1e-5,
    );
    rel_err(&g, &fd, FD_FLOOR)
}
