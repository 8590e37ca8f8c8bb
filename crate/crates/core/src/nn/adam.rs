use crate::error::{Error, Result};

/// Bias-corrected Adam with the usual defaults (`beta1 = 0.9`, `beta2 = 0.999`, `eps = 1e-8`).
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n_params], v: vec![0.0; n_params], t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::DimensionMismatch { expected: self.m.len(), actual: params.len() });
        }
        if grad.len() != self.m.len() {
            return Err(Error::DimensionMismatch { expected: self.m.len(), actual: grad.len() });
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("Adam gradient".into()));
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_and_decays_moments() {
        let mut adam = Adam::new(2, 0.1);
        let mut p = vec![1.0, -1.0];
        adam.step(&mut p, &[1.0, 2.0]).unwrap();
        let (m0, v0) = (adam.first_moment().to_vec(), adam.second_moment().to_vec());
        let before = p.clone();
        adam.step(&mut p, &[0.0, 0.0]).unwrap();
        // the update still moves p through the decaying first moment, but a fresh
        // optimizer with zero gradient does not
        assert!(adam.first_moment().iter().zip(&m0).all(|(a, b)| a.abs() < b.abs()));
        assert!(adam.second_moment().iter().zip(&v0).all(|(a, b)| a < b));
        assert_ne!(p, before);
        let mut fresh = Adam::new(2, 0.1);
        let mut q = vec![1.0, -1.0];
        fresh.step(&mut q, &[0.0, 0.0]).unwrap();
        assert_eq!(q, vec![1.0, -1.0]);
        assert_eq!(fresh.steps(), 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut adam = Adam::new(3, 0.01);
        let mut p = vec![0.0; 3];
        adam.step(&mut p, &[2.0, -0.5, 1e3]).unwrap();
        // m_hat = g, v_hat = g^2, so the step is lr * sign(g) up to eps
        for (x, s) in p.iter().zip([-1.0, 1.0, -1.0]) {
            assert!((x - s * 0.01).abs() < 1e-8);
        }
    }

    #[test]
    fn non_finite_gradient_fails_fast() {
        let mut adam = Adam::new(1, 0.1);
        let mut p = vec![0.0];
        assert!(adam.step(&mut p, &[f64::NAN]).is_err());
        assert_eq!(adam.steps(), 0);
    }

    #[test]
    fn quadratic_bowl_converges() {
        let target = [1.5, -2.0, 0.25];
        let mut p = vec![0.0; 3];
        let mut adam = Adam::new(3, 0.015);
        let loss = |p: &[f64]| p.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let mut prev = loss(&p);
        let mut increases_after_warmup = 0;
        for step in 0..500 {
            let g: Vec<f64> = p.iter().zip(&target).map(|(a, b)| 2.0 * (a - b)).collect();
            adam.step(&mut p, &g).unwrap();
            let l = loss(&p);
            if step > 100 && l > prev {
                increases_after_warmup += 1;
            }
            prev = l;
        }
        assert!(prev < 1e-6, "final loss {prev}");
        assert_eq!(increases_after_warmup, 0);
    }
}
