use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation output `y`.
    fn derivative(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Multi-layer perceptron with a shared hidden activation and a linear output layer.
///
/// All parameters live in one flat vector; layer `l` stores its weights row-major
/// (`out x in`) followed by its biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    hidden: Activation,
    params: Vec<f64>,
}

/// Per-layer outputs of a forward pass; `layers[0]` is the input.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub layers: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.layers.last().expect("cache holds the input at least")
    }
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    /// Fan-in scaled uniform initialization, `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn new(sizes: &[usize], hidden: Activation, rng: &mut Rng) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        let mut params = Vec::with_capacity(param_count(sizes));
        for w in sizes.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..w[0] * w[1] + w[1] {
                params.push(rng.gen_range(-bound..bound));
            }
        }
        Self { sizes: sizes.to_vec(), hidden, params }
    }

    pub fn zeros(sizes: &[usize], hidden: Activation) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        Self { sizes: sizes.to_vec(), hidden, params: vec![0.0; param_count(sizes)] }
    }

    pub fn from_params(sizes: &[usize], hidden: Activation, params: Vec<f64>) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidInput(format!("bad layer sizes {sizes:?}")));
        }
        let n = param_count(sizes);
        if params.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: params.len() });
        }
        Ok(Self { sizes: sizes.to_vec(), hidden, params })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::DimensionMismatch { expected: self.params.len(), actual: params.len() });
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    /// Multiplies the output layer (weights and biases) by `factor`.
    pub fn scale_output_layer(&mut self, factor: f64) {
        let l = self.sizes.len() - 2;
        let (start, end) = self.layer_range(l);
        self.params[start..end].iter_mut().for_each(|p| *p *= factor);
    }

    fn layer_range(&self, layer: usize) -> (usize, usize) {
        let start = param_count(&self.sizes[..=layer]);
        let (fan_in, fan_out) = (self.sizes[layer], self.sizes[layer + 1]);
        (start, start + fan_in * fan_out + fan_out)
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 2 == self.sizes.len() {
            Activation::Identity
        } else {
            self.hidden
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), actual: x.len() });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        for l in 0..self.sizes.len() - 1 {
            cur = self.layer_forward(l, &cur);
        }
        Ok(cur)
    }

    fn layer_forward(&self, l: usize, input: &[f64]) -> Vec<f64> {
        let (start, _) = self.layer_range(l);
        let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
        let w = &self.params[start..start + fan_in * fan_out];
        let b = &self.params[start + fan_in * fan_out..start + fan_in * fan_out + fan_out];
        let act = self.activation(l);
        (0..fan_out)
            .map(|o| {
                let row = &w[o * fan_in..(o + 1) * fan_in];
                let z = b[o] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
                act.apply(z)
            })
            .collect()
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<ForwardCache> {
        self.check_input(x)?;
        let mut layers = Vec::with_capacity(self.sizes.len());
        layers.push(x.to_vec());
        for l in 0..self.sizes.len() - 1 {
            let next = self.layer_forward(l, &layers[l]);
            layers.push(next);
        }
        Ok(ForwardCache { layers })
    }

    /// Reverse pass for the contraction `upstream . output`. Parameter gradients
    /// are added into `param_grad`; the input gradient is returned.
    pub fn backward(&self, cache: &ForwardCache, upstream: &[f64], param_grad: &mut [f64]) -> Result<Vec<f64>> {
        if upstream.len() != self.output_dim() {
            return Err(Error::DimensionMismatch { expected: self.output_dim(), actual: upstream.len() });
        }
        if param_grad.len() != self.params.len() {
            return Err(Error::DimensionMismatch { expected: self.params.len(), actual: param_grad.len() });
        }
        let mut delta = upstream.to_vec();
        for l in (0..self.sizes.len() - 1).rev() {
            let act = self.activation(l);
            let out = &cache.layers[l + 1];
            for (d, y) in delta.iter_mut().zip(out) {
                *d *= act.derivative(*y);
            }
            let (start, _) = self.layer_range(l);
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let input = &cache.layers[l];
            let mut next = vec![0.0; fan_in];
            for o in 0..fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = start + o * fan_in;
                let gw = &mut param_grad[row..row + fan_in];
                for (g, x) in gw.iter_mut().zip(input) {
                    *g += d * x;
                }
                param_grad[start + fan_in * fan_out + o] += d;
                let w = &self.params[row..row + fan_in];
                for (n, w) in next.iter_mut().zip(w) {
                    *n += d * w;
                }
            }
            delta = next;
        }
        Ok(delta)
    }

    /// Forward-mode directional derivative of the output with respect to the
    /// parameters along `direction`.
    pub fn jvp(&self, cache: &ForwardCache, direction: &[f64]) -> Result<Vec<f64>> {
        if direction.len() != self.params.len() {
            return Err(Error::DimensionMismatch { expected: self.params.len(), actual: direction.len() });
        }
        let mut tangent = vec![0.0; self.input_dim()];
        for l in 0..self.sizes.len() - 1 {
            let (start, _) = self.layer_range(l);
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let input = &cache.layers[l];
            let out = &cache.layers[l + 1];
            let act = self.activation(l);
            tangent = (0..fan_out)
                .map(|o| {
                    let row = start + o * fan_in;
                    let w = &self.params[row..row + fan_in];
                    let dw = &direction[row..row + fan_in];
                    let mut dz = direction[start + fan_in * fan_out + o];
                    for i in 0..fan_in {
                        dz += dw[i] * input[i] + w[i] * tangent[i];
                    }
                    dz * act.derivative(out[o])
                })
                .collect();
        }
        Ok(tangent)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn random_net(seed: u64, sizes: &[usize], act: Activation) -> Mlp {
        Mlp::new(sizes, act, &mut rng::from_seed(seed))
    }

    #[test]
    fn zero_net_outputs_zero() {
        let net = Mlp::zeros(&[3, 5, 2], Activation::Tanh);
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_linear_layer() {
        let net = Mlp::from_params(&[2, 2], Activation::Tanh, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(net.forward(&[0.3, -7.0]).unwrap(), vec![0.3, -7.0]);
    }

    #[test]
    fn hand_evaluated_two_two_one() {
        let p = vec![0.5, -0.3, 0.8, 0.1, 0.05, -0.2, 1.5, -0.7, 0.25];
        let net = Mlp::from_params(&[2, 2, 1], Activation::Tanh, p).unwrap();
        let x = [0.4, -1.2];
        let h0 = (0.5 * 0.4 + -0.3 * -1.2 + 0.05f64).tanh();
        let h1 = (0.8 * 0.4 + 0.1 * -1.2 + -0.2f64).tanh();
        let y = 1.5 * h0 + -0.7 * h1 + 0.25;
        assert!((net.forward(&x).unwrap()[0] - y).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let net = random_net(1, &[3, 4, 2], Activation::Relu);
        assert!(net.forward(&[1.0]).is_err());
        let cache = net.forward_cached(&[1.0, 2.0, 3.0]).unwrap();
        let mut g = vec![0.0; net.n_params()];
        assert!(net.backward(&cache, &[1.0], &mut g).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let net = random_net(2, &[3, 4, 2], Activation::Tanh);
        let cache = net.forward_cached(&[0.1, 0.2, 0.3]).unwrap();
        let mut g = vec![0.0; net.n_params()];
        let gin = net.backward(&cache, &[0.0, 0.0], &mut g).unwrap();
        assert!(g.iter().chain(&gin).all(|v| *v == 0.0));
    }

    #[test]
    fn linear_least_squares_gradient() {
        // single linear layer, loss 1/2 sum_i (w.x_i + b - y_i)^2
        let w = vec![0.4, -0.6, 0.2];
        let net = Mlp::from_params(&[2, 1], Activation::Identity, w.clone()).unwrap();
        let xs = [[1.0, 2.0], [-0.5, 0.3], [2.0, -1.0]];
        let ys = [0.7, -0.2, 1.1];
        let mut g = vec![0.0; 3];
        for (x, y) in xs.iter().zip(&ys) {
            let cache = net.forward_cached(x).unwrap();
            let r = cache.output()[0] - y;
            net.backward(&cache, &[r], &mut g).unwrap();
        }
        // closed form X^T (X w - y) with X augmented by a ones column
        let mut expected = [0.0; 3];
        for (x, y) in xs.iter().zip(&ys) {
            let r = w[0] * x[0] + w[1] * x[1] + w[2] - y;
            expected[0] += x[0] * r;
            expected[1] += x[1] * r;
            expected[2] += r;
        }
        for (a, b) in g.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn jvp_matches_reverse_mode_contractions() {
        let net = random_net(3, &[3, 6, 5, 2], Activation::Tanh);
        let x = [0.3, -0.2, 0.9];
        let cache = net.forward_cached(&x).unwrap();
        let mut r = rng::from_seed(9);
        let v: Vec<f64> = (0..net.n_params()).map(|_| r.gen_range(-1.0..1.0)).collect();
        let jv = net.jvp(&cache, &v).unwrap();
        for k in 0..2 {
            let mut e = vec![0.0; 2];
            e[k] = 1.0;
            let mut row = vec![0.0; net.n_params()];
            net.backward(&cache, &e, &mut row).unwrap();
            let dot: f64 = row.iter().zip(&v).map(|(a, b)| a * b).sum();
            assert!((dot - jv[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn flatten_round_trip_is_exact() {
        let net = random_net(4, &[4, 8, 3], Activation::Relu);
        let rebuilt = Mlp::from_params(net.sizes(), net.hidden_activation(), net.params().to_vec()).unwrap();
        assert_eq!(net, rebuilt);
    }
}
