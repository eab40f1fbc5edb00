use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{dot, Matrix};
use crate::rng::seeded;
use crate::{Error, Result};

/// Hidden-layer widths; the output layer is a single linear unit.
pub const HIDDEN_WIDTHS: [usize; 4] = [64, 32, 16, 8];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `out × in`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Fully-connected network with rectified-linear hidden units and an identity output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MLPModel {
    pub layer_sizes: Vec<usize>,
    pub layers: Vec<Layer>,
}

impl MLPModel {
    pub fn zeros(layer_sizes: &[usize]) -> Self {
        let layers = layer_sizes
            .windows(2)
            .map(|w| Layer { weights: Matrix::zeros(w[1], w[0]), bias: vec![0.0; w[1]] })
            .collect();
        MLPModel { layer_sizes: layer_sizes.to_vec(), layers }
    }

    /// He-scaled normal weights, zero biases.
    pub fn he_init(layer_sizes: &[usize], seed: u64) -> Self {
        let mut rng = seeded(seed);
        let mut m = Self::zeros(layer_sizes);
        for layer in &mut m.layers {
            let fan_in = layer.weights.cols() as f64;
            let sd = libm::sqrt(2.0 / fan_in);
            for i in 0..layer.weights.rows() {
                for w in layer.weights.row_mut(i) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *w = sd * z;
                }
            }
        }
        m
    }

    pub fn default_architecture(input_dim: usize) -> Vec<usize> {
        let mut s = vec![input_dim];
        s.extend_from_slice(&HIDDEN_WIDTHS);
        s.push(1);
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.rows() * l.weights.cols() + l.bias.len()).sum()
    }

    /// Weights then bias of each layer, in layer order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            v.extend_from_slice(l.weights.as_slice());
            v.extend_from_slice(&l.bias);
        }
        v
    }

    pub fn from_flat(layer_sizes: &[usize], params: &[f64]) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::Config("a network needs at least an input and an output layer".into()));
        }
        let mut m = Self::zeros(layer_sizes);
        if params.len() != m.n_params() {
            return Err(Error::DimensionMismatch { expected: m.n_params(), got: params.len() });
        }
        let mut off = 0;
        for l in &mut m.layers {
            let nw = l.weights.rows() * l.weights.cols();
            l.weights = Matrix::from_vec(l.weights.rows(), l.weights.cols(), params[off..off + nw].to_vec())?;
            off += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&params[off..off + nb]);
            off += nb;
        }
        Ok(m)
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: x.cols() });
        }
        Ok(())
    }

    /// Activations of every layer for one input, input included.
    fn activations(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.to_vec());
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let prev = acts.last().expect("input pushed");
            let out: Vec<f64> = layer
                .weights
                .row_iter()
                .zip(&layer.bias)
                .map(|(w, b)| {
                    let z = dot(w, prev) + b;
                    if li == last || z > 0.0 {
                        z
                    } else {
                        0.0
                    }
                })
                .collect();
            acts.push(out);
        }
        acts
    }
}

pub fn mlp_forward(model: &MLPModel, x: &Matrix) -> Result<Vec<f64>> {
    model.check_input(x)?;
    Ok(x.row_iter().map(|r| model.activations(r).pop().expect("output layer")[0]).collect())
}

/// Gradients of `L = (1/2n)·Σ (ŷ_i - y_i)²`, shaped like the model.
pub fn mlp_gradients(model: &MLPModel, x: &Matrix, y: &[f64]) -> Result<MLPModel> {
    model.check_input(x)?;
    if y.len() != x.rows() {
        return Err(Error::DimensionMismatch { expected: x.rows(), got: y.len() });
    }
    let rows: Vec<usize> = (0..x.rows()).collect();
    let mut grad = MLPModel::zeros(&model.layer_sizes);
    accumulate_gradients(model, x, y, &rows, &mut grad);
    Ok(grad)
}

/// Adds the gradient of the batch loss over `rows` into `grad` (which must start at zero).
/// Returns the batch loss.
fn accumulate_gradients(model: &MLPModel, x: &Matrix, y: &[f64], rows: &[usize], grad: &mut MLPModel) -> f64 {
    let n = rows.len() as f64;
    let mut loss = 0.0;
    for &r in rows {
        let acts = model.activations(x.row(r));
        let out = acts[acts.len() - 1][0];
        let err = out - y[r];
        loss += 0.5 * err * err / n;
        let mut delta = vec![err / n];
        for li in (0..model.layers.len()).rev() {
            let layer = &model.layers[li];
            let a_prev = &acts[li];
            let g = &mut grad.layers[li];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.bias[o] += d;
                for (gw, &a) in g.weights.row_mut(o).iter_mut().zip(a_prev) {
                    *gw += d * a;
                }
            }
            if li == 0 {
                break;
            }
            let mut next = vec![0.0; a_prev.len()];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (nv, &w) in next.iter_mut().zip(layer.weights.row(o)) {
                    *nv += d * w;
                }
            }
            // a_prev is a hidden activation here: ReLU'(z) = 1 iff a > 0
            for (nv, &a) in next.iter_mut().zip(a_prev) {
                if a <= 0.0 {
                    *nv = 0.0;
                }
            }
            delta = next;
        }
    }
    loss
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 500, batch_size: 32, step_size: 1e-3, beta1: 0.9, beta2: 0.999, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || !(self.step_size > 0.0) {
            return Err(Error::Config("epochs, batch_size and step_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("moment decay rates must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedMlp {
    pub model: MLPModel,
    /// Full-training-set MSE after each epoch.
    pub loss_curve: Vec<f64>,
}

const ADAM_EPS: f64 = 1e-8;

/// Mini-batch Adam on the ½-scaled MSE from a He initialization.
pub fn train_mlp(x: &Matrix, y: &[f64], config: &TrainConfig) -> Result<TrainedMlp> {
    config.validate()?;
    if x.rows() == 0 {
        return Err(Error::EmptySample);
    }
    if y.len() != x.rows() {
        return Err(Error::DimensionMismatch { expected: x.rows(), got: y.len() });
    }
    let sizes = MLPModel::default_architecture(x.cols());
    let mut model = MLPModel::he_init(&sizes, config.seed);
    let mut rng = seeded(config.seed ^ 0x5348_5546);
    let n_params = model.n_params();
    let mut m1 = vec![0.0; n_params];
    let mut m2 = vec![0.0; n_params];
    let mut t = 0i32;
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut curve = Vec::with_capacity(config.epochs);
    let mut grad = MLPModel::zeros(&sizes);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            for l in &mut grad.layers {
                l.bias.fill(0.0);
                for i in 0..l.weights.rows() {
                    l.weights.row_mut(i).fill(0.0);
                }
            }
            let loss = accumulate_gradients(&model, x, y, batch, &mut grad);
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            t += 1;
            let bc1 = 1.0 - libm::pow(config.beta1, f64::from(t));
            let bc2 = 1.0 - libm::pow(config.beta2, f64::from(t));
            let mut idx = 0;
            for (layer, g) in model.layers.iter_mut().zip(&grad.layers) {
                let rows = layer.weights.rows();
                let mut update = |p: &mut f64, g: f64, idx: usize| {
                    m1[idx] = config.beta1 * m1[idx] + (1.0 - config.beta1) * g;
                    m2[idx] = config.beta2 * m2[idx] + (1.0 - config.beta2) * g * g;
                    let mh = m1[idx] / bc1;
                    let vh = m2[idx] / bc2;
                    *p -= config.step_size * mh / (libm::sqrt(vh) + ADAM_EPS);
                };
                for i in 0..rows {
                    for (p, &gv) in layer.weights.row_mut(i).iter_mut().zip(g.weights.row(i)) {
                        update(p, gv, idx);
                        idx += 1;
                    }
                }
                for (p, &gv) in layer.bias.iter_mut().zip(&g.bias) {
                    update(p, gv, idx);
                    idx += 1;
                }
            }
        }
        let pred = mlp_forward(&model, x)?;
        let mse = pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / y.len() as f64;
        if !mse.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        curve.push(mse);
    }
    Ok(TrainedMlp { model, loss_curve: curve })
}
