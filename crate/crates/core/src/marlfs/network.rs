//! Small fully connected Q-network with manual backpropagation and Adam.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightInit {
    /// Uniform in ±sqrt(6 / (fan_in + fan_out)), zero biases.
    #[default]
    GlorotUniform,
    Zeros,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    /// Row-major `n_out x n_in`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn new(n_in: usize, n_out: usize, init: WeightInit, rng: &mut Rng) -> Self {
        let weights = match init {
            WeightInit::Zeros => vec![0.0; n_in * n_out],
            WeightInit::GlorotUniform => {
                let limit = (6.0 / (n_in + n_out) as f64).sqrt();
                (0..n_in * n_out)
                    .map(|_| rng.gen_range(-limit..limit))
                    .collect()
            }
        };
        Dense {
            n_in,
            n_out,
            weights,
            bias: vec![0.0; n_out],
        }
    }

    fn forward(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.n_out {
            let row = &self.weights[o * self.n_in..(o + 1) * self.n_in];
            let z: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + self.bias[o];
            out.push(z);
        }
    }

    fn n_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Q(s, ·) for the two actions: index 0 deselects, index 1 selects.
pub type QValues = [f64; 2];

/// Rectified hidden layers, linear output of width 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QNetwork {
    pub layers: Vec<Dense>,
}

impl QNetwork {
    /// `sizes` lists every layer width, input first; the last must be 2.
    pub fn new(sizes: &[usize], init: WeightInit, rng: &mut Rng) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidParameter(format!("bad layer sizes {sizes:?}")));
        }
        if *sizes.last().unwrap() != 2 {
            return Err(Error::InvalidParameter(
                "Q-network output width must be 2".into(),
            ));
        }
        let layers = sizes
            .windows(2)
            .map(|w| Dense::new(w[0], w[1], init, rng))
            .collect();
        Ok(QNetwork { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.n_out))
            .collect()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(Dense::n_params).sum()
    }

    pub fn forward(&self, state: &[f64]) -> Result<QValues> {
        if state.len() != self.input_dim() {
            return Err(Error::LengthMismatch {
                expected: self.input_dim(),
                actual: state.len(),
            });
        }
        let acts = self.activations(state);
        let out = acts.last().unwrap();
        Ok([out[0], out[1]])
    }

    /// Layer outputs (after the rectifier on hidden layers), input first.
    fn activations(&self, state: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(state.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.n_out);
            layer.forward(acts.last().unwrap(), &mut z);
            if i < last {
                for v in &mut z {
                    *v = v.max(0.0);
                }
            }
            acts.push(z);
        }
        acts
    }

    /// Parameters flattened as (weights, bias) per layer, input layer first.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            p.extend_from_slice(&l.weights);
            p.extend_from_slice(&l.bias);
        }
        p
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::LengthMismatch {
                expected: self.n_params(),
                actual: params.len(),
            });
        }
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[off..off + nw]);
            off += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&params[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    /// Mean over the batch of `(target - Q(s, a))²`, counting only the taken
    /// action, and its gradient with respect to [`QNetwork::params`].
    pub fn loss_and_gradient(&self, batch: &[Sample<'_>]) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::Degenerate("empty batch".into()));
        }
        let n = batch.len() as f64;
        let mut grads: Vec<(Vec<f64>, Vec<f64>)> = self
            .layers
            .iter()
            .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]))
            .collect();
        let mut loss = 0.0;
        for sample in batch {
            if sample.state.len() != self.input_dim() {
                return Err(Error::LengthMismatch {
                    expected: self.input_dim(),
                    actual: sample.state.len(),
                });
            }
            if sample.action > 1 {
                return Err(Error::InvalidParameter(format!(
                    "action {} is not 0 or 1",
                    sample.action
                )));
            }
            let acts = self.activations(sample.state);
            let q = acts.last().unwrap()[sample.action];
            let err = q - sample.target;
            loss += err * err;

            // dL/d(output) is nonzero only for the taken action.
            let mut delta = vec![0.0; 2];
            delta[sample.action] = 2.0 * err / n;
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let input = &acts[li];
                let (gw, gb) = &mut grads[li];
                for o in 0..layer.n_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    let row = &mut gw[o * layer.n_in..(o + 1) * layer.n_in];
                    for (g, x) in row.iter_mut().zip(input) {
                        *g += d * x;
                    }
                }
                if li == 0 {
                    break;
                }
                // Back through the weights, then the rectifier of the previous layer.
                let mut prev = vec![0.0; layer.n_in];
                for o in 0..layer.n_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[o * layer.n_in..(o + 1) * layer.n_in];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
                for (p, &a) in prev.iter_mut().zip(input) {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        let flat = grads
            .into_iter()
            .flat_map(|(w, b)| w.into_iter().chain(b))
            .collect();
        Ok((loss / n, flat))
    }
}

/// One regression sample for the Q-network.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub state: &'a [f64],
    pub action: usize,
    pub target: f64,
}

/// Adaptive moment estimation over a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n_params: usize, learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, net: &mut QNetwork, grads: &[f64]) -> Result<()> {
        if grads.len() != self.m.len() {
            return Err(Error::LengthMismatch {
                expected: self.m.len(),
                actual: grads.len(),
            });
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let mut params = net.params();
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        net.set_params(&params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn zero_network_outputs_zero() {
        let net = QNetwork::new(&[8, 64, 8, 2], WeightInit::Zeros, &mut rng::seeded(0)).unwrap();
        assert_eq!(net.forward(&[1.0; 8]).unwrap(), [0.0, 0.0]);
        assert!(net.forward(&[1.0; 7]).is_err());
        assert_eq!(net.n_params(), 8 * 64 + 64 + 64 * 8 + 8 + 8 * 2 + 2);
    }

    #[test]
    fn hand_forward_pass() {
        // 1 -> 1 -> 1 -> 2 with hand-picked weights.
        let mut net = QNetwork::new(&[1, 1, 1, 2], WeightInit::Zeros, &mut rng::seeded(0)).unwrap();
        // layer0: w=2, b=-1; layer1: w=3, b=0.5; layer2: w=[1,-1], b=[0, 4]
        net.set_params(&[2.0, -1.0, 3.0, 0.5, 1.0, -1.0, 0.0, 4.0]).unwrap();
        // s = 2: h1 = relu(3) = 3; h2 = relu(9.5) = 9.5; q = (9.5, -9.5 + 4)
        assert_eq!(net.forward(&[2.0]).unwrap(), [9.5, -5.5]);
        // s = 0: h1 = relu(-1) = 0; h2 = relu(0.5) = 0.5; q = (0.5, 3.5)
        assert_eq!(net.forward(&[0.0]).unwrap(), [0.5, 3.5]);
    }

    #[test]
    fn glorot_bounds_and_determinism() {
        let a = QNetwork::new(&[8, 64, 8, 2], WeightInit::GlorotUniform, &mut rng::seeded(3)).unwrap();
        let b = QNetwork::new(&[8, 64, 8, 2], WeightInit::GlorotUniform, &mut rng::seeded(3)).unwrap();
        assert_eq!(a, b);
        let limit = (6.0f64 / 72.0).sqrt();
        assert!(a.layers[0].weights.iter().all(|w| w.abs() <= limit));
        assert!(a.layers.iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
        let s = [0.3, -1.0, 2.0, 0.0, 0.5, 0.1, -0.2, 1.0];
        assert_eq!(a.forward(&s).unwrap(), a.forward(&s).unwrap());
    }

    #[test]
    fn adam_zero_gradient_is_noop() {
        let mut net = QNetwork::new(&[2, 4, 2], WeightInit::GlorotUniform, &mut rng::seeded(1)).unwrap();
        let before = net.params();
        let mut adam = Adam::new(net.n_params(), 0.01);
        adam.step(&mut net, &vec![0.0; before.len()]).unwrap();
        assert_eq!(net.params(), before);
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut net = QNetwork::new(&[1, 2], WeightInit::Zeros, &mut rng::seeded(1)).unwrap();
        let mut adam = Adam::new(net.n_params(), 0.01);
        adam.step(&mut net, &[1.0, -2.0, 0.0, 0.5]).unwrap();
        let p = net.params();
        // First bias-corrected step is lr * g / (|g| + eps).
        assert!((p[0] + 0.01).abs() < 1e-9);
        assert!((p[1] - 0.01).abs() < 1e-9);
        assert_eq!(p[2], 0.0);
        assert!((p[3] + 0.01).abs() < 1e-9);
    }
}
