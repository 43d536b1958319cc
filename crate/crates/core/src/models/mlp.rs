//! Multilayer perceptron regressor: tanh hidden layers, linear scalar
//! output, weighted squared error, mini-batch gradient descent with Adam
//! steps.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden_layers: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpParams {
    /// One hidden layer of 32 units, Adam at 0.01, 100 epochs of batches of 64.
    fn default() -> Self {
        MlpParams { hidden_layers: vec![32], learning_rate: 0.01, epochs: 100, batch_size: 64, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub params: MlpParams,
    pub layers: Vec<Layer>,
    /// Weighted training loss after each epoch.
    #[serde(default)]
    pub loss_history: Vec<f64>,
}

impl Mlp {
    /// Random network with layer widths `input, hidden..., 1`, Glorot-uniform
    /// weights and zero biases.
    pub fn new(input_dim: usize, hidden: &[usize], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut widths = vec![input_dim];
        widths.extend_from_slice(hidden);
        widths.push(1);
        let layers = widths
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                let limit = libm::sqrt(6.0 / (inputs + outputs) as f64);
                Layer {
                    inputs,
                    outputs,
                    weights: (0..inputs * outputs).map(|_| rng.gen_range(-limit..limit)).collect(),
                    bias: vec![0.0; outputs],
                }
            })
            .collect();
        Mlp {
            params: MlpParams { hidden_layers: hidden.to_vec(), ..MlpParams::default() },
            layers,
            loss_history: vec![],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// All weights then biases, layer by layer.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            p.extend_from_slice(&l.weights);
            p.extend_from_slice(&l.bias);
        }
        p
    }

    pub fn set_parameters(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.parameter_count(), "parameter vector length");
        let mut k = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&p[k..k + nw]);
            k += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&p[k..k + nb]);
            k += nb;
        }
    }

    /// Activations of every layer, input first. Hidden layers are tanh,
    /// the output is linear.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for (li, l) in self.layers.iter().enumerate() {
            let input = &acts[li];
            let last = li + 1 == self.layers.len();
            let out: Vec<f64> = (0..l.outputs)
                .map(|o| {
                    let row = &l.weights[o * l.inputs..(o + 1) * l.inputs];
                    let z = l.bias[o] + row.iter().zip(input).map(|(w, v)| w * v).sum::<f64>();
                    if last { z } else { libm::tanh(z) }
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    /// Raw regression output.
    pub fn forward(&self, x: &[f64]) -> f64 {
        self.activations(x).last().expect("output layer")[0]
    }

    /// Weighted mean squared error `sum w_i (f(x_i) - y_i)^2 / sum w_i` over
    /// the listed rows, and its gradient in [`Mlp::parameters`] order.
    pub fn loss_and_gradient(&self, x: &[f64], y: &[f64], w: &[f64], rows: &[usize]) -> (f64, Vec<f64>) {
        let dim = self.input_dim();
        let total_w: f64 = rows.iter().map(|&i| w[i]).sum();
        let mut grads: Vec<(Vec<f64>, Vec<f64>)> =
            self.layers.iter().map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()])).collect();
        let mut loss = 0.0;
        for &i in rows {
            let acts = self.activations(&x[i * dim..(i + 1) * dim]);
            let err = acts.last().expect("output")[0] - y[i];
            loss += w[i] * err * err;
            // dL/d(output pre-activation)
            let mut delta = vec![2.0 * w[i] * err / total_w];
            for li in (0..self.layers.len()).rev() {
                let l = &self.layers[li];
                let input = &acts[li];
                let (gw, gb) = &mut grads[li];
                for o in 0..l.outputs {
                    gb[o] += delta[o];
                    for (k, v) in input.iter().enumerate() {
                        gw[o * l.inputs + k] += delta[o] * v;
                    }
                }
                if li > 0 {
                    // back through the weights, then through tanh of layer li-1
                    delta = (0..l.inputs)
                        .map(|k| {
                            let s: f64 = (0..l.outputs).map(|o| l.weights[o * l.inputs + k] * delta[o]).sum();
                            s * (1.0 - input[k] * input[k])
                        })
                        .collect();
                }
            }
        }
        let mut flat = Vec::with_capacity(self.parameter_count());
        for (gw, gb) in grads {
            flat.extend(gw);
            flat.extend(gb);
        }
        (loss / total_w, flat)
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(Self::B1, self.t as f64);
        let c2 = 1.0 - libm::pow(Self::B2, self.t as f64);
        for k in 0..params.len() {
            self.m[k] = Self::B1 * self.m[k] + (1.0 - Self::B1) * grad[k];
            self.v[k] = Self::B2 * self.v[k] + (1.0 - Self::B2) * grad[k] * grad[k];
            let mh = self.m[k] / c1;
            let vh = self.v[k] / c2;
            params[k] -= lr * mh / (libm::sqrt(vh) + Self::EPS);
        }
    }
}

pub(super) fn fit(x: &[f64], dim: usize, y: &[f64], w: &[f64], params: &MlpParams) -> Result<Mlp, ModelError> {
    if y.is_empty() {
        return Err(ModelError::EmptyData);
    }
    if params.batch_size == 0 {
        return Err(ModelError::InvalidHyperparameter("batch_size must be at least 1"));
    }
    if !(params.learning_rate.is_finite() && params.learning_rate > 0.0) {
        return Err(ModelError::InvalidHyperparameter("learning_rate must be positive"));
    }
    if params.hidden_layers.contains(&0) {
        return Err(ModelError::InvalidHyperparameter("hidden layers must have at least one unit"));
    }
    let mut net = Mlp::new(dim, &params.hidden_layers, params.seed);
    net.params = params.clone();
    // start the output at the weighted mean so a constant target is already fit
    let total_w: f64 = w.iter().sum();
    let mean = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / total_w;
    net.layers.last_mut().expect("output layer").bias[0] = mean;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x5eed);
    let mut order: Vec<usize> = (0..y.len()).collect();
    let mut p = net.parameters();
    let mut adam = Adam { m: vec![0.0; p.len()], v: vec![0.0; p.len()], t: 0 };
    let all: Vec<usize> = (0..y.len()).collect();

    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(params.batch_size) {
            let (_, g) = net.loss_and_gradient(x, y, w, batch);
            adam.step(&mut p, &g, params.learning_rate);
            net.set_parameters(&p);
        }
        let loss = weighted_mse(&net, x, y, w, &all);
        if !loss.is_finite() || p.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::DivergenceDetected { epoch });
        }
        net.loss_history.push(loss);
    }
    Ok(net)
}

fn weighted_mse(net: &Mlp, x: &[f64], y: &[f64], w: &[f64], rows: &[usize]) -> f64 {
    let dim = net.input_dim();
    let mut num = 0.0;
    let mut den = 0.0;
    for &i in rows {
        let e = net.forward(&x[i * dim..(i + 1) * dim]) - y[i];
        num += w[i] * e * e;
        den += w[i];
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::super::{train_nnr, ModelParams, PredictedKey, TrainingMatrix};
    use super::*;
    use crate::label::ClassLabel;

    #[test]
    fn constant_target() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let y = vec![ClassLabel::new(2).unwrap(); 40];
        let m = TrainingMatrix::from_rows(&rows, y).unwrap();
        let model = train_nnr(&m, &MlpParams::default()).unwrap();
        for r in &rows {
            let PredictedKey::Score(v) = model.predict_row(r).unwrap() else { unreachable!() };
            assert!((v - 2.0).abs() <= 0.05, "{v}");
        }
    }

    #[test]
    fn divergence_is_reported() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<ClassLabel> = (0..20).map(|i| ClassLabel::new((i % 6) as u8).unwrap()).collect();
        let m = TrainingMatrix::from_rows(&rows, y).unwrap();
        let params = MlpParams { learning_rate: 1e300, ..Default::default() };
        assert!(matches!(train_nnr(&m, &params), Err(ModelError::DivergenceDetected { .. })));
    }

    #[test]
    fn same_seed_same_network() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i * i % 7) as f64]).collect();
        let y: Vec<ClassLabel> = (0..30).map(|i| ClassLabel::new((i % 4) as u8).unwrap()).collect();
        let m = TrainingMatrix::from_rows(&rows, y).unwrap();
        let p = MlpParams { epochs: 5, ..Default::default() };
        let a = train_nnr(&m, &p).unwrap();
        let b = train_nnr(&m, &p).unwrap();
        assert_eq!(a, b);
        let ModelParams::Nnr(net) = &a.params else { unreachable!() };
        assert_eq!(net.loss_history.len(), 5);
    }

    #[test]
    fn parameter_round_trip() {
        let mut net = Mlp::new(3, &[4, 2], 1);
        let p = net.parameters();
        assert_eq!(p.len(), 3 * 4 + 4 + 4 * 2 + 2 + 2 + 1);
        let doubled: Vec<f64> = p.iter().map(|v| v * 2.0).collect();
        net.set_parameters(&doubled);
        assert_eq!(net.parameters(), doubled);
    }
}
