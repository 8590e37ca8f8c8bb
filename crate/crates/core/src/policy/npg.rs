use serde::{Deserialize, Serialize};

use super::GaussianPolicy;
use crate::error::{Error, Result};
use crate::nn::ForwardCache;

/// Vanilla policy gradient `mean_i grad log pi(a_i | s_i) * adv_i`.
pub fn policy_gradient(policy: &GaussianPolicy, states: &[Vec<f64>], actions: &[Vec<f64>], advantages: &[f64]) -> Result<Vec<f64>> {
    if states.len() != actions.len() || states.len() != advantages.len() {
        return Err(Error::DimensionMismatch { expected: states.len(), actual: actions.len().min(advantages.len()) });
    }
    if states.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut g = vec![0.0; policy.n_params()];
    let w = 1.0 / states.len() as f64;
    for ((s, a), adv) in states.iter().zip(actions).zip(advantages) {
        if *adv != 0.0 {
            policy.accumulate_score(s, a, adv * w, &mut g)?;
        }
    }
    crate::error::ensure_finite(&g, "policy gradient")?;
    Ok(g)
}

/// Exact expected Fisher of the Gaussian policy over a fixed set of states.
///
/// The mean block is `E_s[J^T diag(1/sigma^2) J]` with `J` the mean network Jacobian;
/// the log-std block is `2 I`; the two blocks do not interact.
pub struct FisherOperator<'a> {
    policy: &'a GaussianPolicy,
    caches: Vec<ForwardCache>,
    inv_var: Vec<f64>,
    damping: f64,
}

impl<'a> FisherOperator<'a> {
    pub fn new(policy: &'a GaussianPolicy, states: &[Vec<f64>], damping: f64) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let caches = states.iter().map(|s| policy.mean.forward_cached(s)).collect::<Result<Vec<_>>>()?;
        let inv_var = policy.log_std.iter().map(|l| (-2.0 * l).exp()).collect();
        Ok(Self { policy, caches, inv_var, damping })
    }

    pub fn dim(&self) -> usize {
        self.policy.n_params()
    }

    /// `(F + damping I) v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: v.len() });
        }
        let n = self.policy.mean.n_params();
        let (vm, vs) = v.split_at(n);
        let mut out = vec![0.0; v.len()];
        let w = 1.0 / self.caches.len() as f64;
        {
            let om = &mut out[..n];
            for cache in &self.caches {
                let u = self.policy.mean.jvp(cache, vm)?;
                let up: Vec<f64> = u.iter().zip(&self.inv_var).map(|(u, iv)| u * iv * w).collect();
                self.policy.mean.backward(cache, &up, om)?;
            }
        }
        for (o, x) in out[n..].iter_mut().zip(vs) {
            *o = 2.0 * x;
        }
        for (o, x) in out.iter_mut().zip(v) {
            *o += self.damping * x;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Non-positive curvature was met.
    pub breakdown: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradient for `A x = b` starting from zero.
pub fn conjugate_gradient<F>(mut apply: F, b: &[f64], iters: usize, tol: f64) -> Result<CgResult>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut x = vec![0.0; b.len()];
    let mut r = b.to_vec();
    let mut p = b.to_vec();
    let mut rr = dot(&r, &r);
    for it in 0..iters {
        if rr <= tol * tol {
            return Ok(CgResult { x, iterations: it, breakdown: false });
        }
        let ap = apply(&p)?;
        let curv = dot(&p, &ap);
        if !(curv > 0.0) {
            return Ok(CgResult { x, iterations: it, breakdown: true });
        }
        let alpha = rr / curv;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..p.len() {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    Ok(CgResult { x, iterations: iters, breakdown: false })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpgStep {
    pub delta_theta: Vec<f64>,
    /// `delta_theta^T (F + damping I) delta_theta`.
    pub quad_form: f64,
    /// `g^T delta_theta`.
    pub ascent: f64,
    /// CG broke down and the plain gradient direction was used instead.
    pub fallback: bool,
    /// The gradient was numerically zero and no step was taken.
    pub skipped: bool,
    pub cg_iterations: usize,
}

/// Normalized natural gradient step `sqrt(delta / x^T A x) x` with `x ~= A^{-1} g`.
pub fn normalized_step<F>(g: &[f64], mut apply: F, delta: f64, cg_iters: usize) -> Result<NpgStep>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    crate::error::ensure_finite(g, "policy gradient")?;
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!("step size {delta} must be non-negative")));
    }
    let zero = NpgStep {
        delta_theta: vec![0.0; g.len()],
        quad_form: 0.0,
        ascent: 0.0,
        fallback: false,
        skipped: true,
        cg_iterations: 0,
    };
    if dot(g, g).sqrt() < 1e-12 {
        return Ok(zero);
    }
    let cg = conjugate_gradient(&mut apply, g, cg_iters, 1e-14)?;
    let (mut dir, mut fallback) = (cg.x, cg.breakdown);
    let mut quad = if fallback || dot(&dir, &dir) == 0.0 { 0.0 } else { dot(&dir, &apply(&dir)?) };
    if !(quad > 0.0 && dot(g, &dir) > 0.0) {
        fallback = true;
        dir = g.to_vec();
        quad = dot(&dir, &apply(&dir)?);
        if !(quad > 0.0) {
            return Err(Error::NonFinite("Fisher quadratic form is not positive".into()));
        }
    }
    let scale = (delta / quad).sqrt();
    let delta_theta: Vec<f64> = dir.iter().map(|d| d * scale).collect();
    crate::error::ensure_finite(&delta_theta, "NPG step")?;
    // measured on the final step rather than inferred from the scaling
    let quad_form = dot(&delta_theta, &apply(&delta_theta)?);
    Ok(NpgStep {
        ascent: dot(g, &delta_theta),
        quad_form,
        delta_theta,
        fallback,
        skipped: false,
        cg_iterations: cg.iterations,
    })
}
