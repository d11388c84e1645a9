//! One-hidden-layer perceptron: sigmoid hidden units, softmax output,
//! full-batch backpropagation with momentum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{encode_labels, require_nonempty, softmax_in_place, ModelPayload, Standardizer, TrainedModel};
use crate::dataset::TraceDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpParams {
    /// Hidden units; `ceil((features + classes) / 2)` when unset.
    pub hidden: Option<usize>,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: None,
            learning_rate: 0.3,
            momentum: 0.2,
            epochs: 500,
        }
    }
}

pub fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// All weight blocks, row-major: hidden (hidden x features) and output
/// (classes x hidden).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub n_features: usize,
    pub n_hidden: usize,
    pub n_classes: usize,
    pub hidden_weights: Vec<f64>,
    pub hidden_biases: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_biases: Vec<f64>,
}

impl NetworkParams {
    pub fn zeros(n_features: usize, n_hidden: usize, n_classes: usize) -> Self {
        NetworkParams {
            n_features,
            n_hidden,
            n_classes,
            hidden_weights: vec![0.0; n_hidden * n_features],
            hidden_biases: vec![0.0; n_hidden],
            output_weights: vec![0.0; n_classes * n_hidden],
            output_biases: vec![0.0; n_classes],
        }
    }

    /// Uniform in [-0.5, 0.5].
    pub fn random(n_features: usize, n_hidden: usize, n_classes: usize, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(n_features, n_hidden, n_classes);
        for v in p.blocks_mut().into_iter().flatten() {
            *v = rng.random_range(-0.5..=0.5);
        }
        p
    }

    pub fn blocks(&self) -> [&Vec<f64>; 4] {
        [
            &self.hidden_weights,
            &self.hidden_biases,
            &self.output_weights,
            &self.output_biases,
        ]
    }

    pub fn blocks_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [
            &mut self.hidden_weights,
            &mut self.hidden_biases,
            &mut self.output_weights,
            &mut self.output_biases,
        ]
    }

    fn hidden(&self, x: &[f64]) -> Vec<f64> {
        let f = self.n_features;
        (0..self.n_hidden)
            .map(|j| {
                let w = &self.hidden_weights[j * f..(j + 1) * f];
                sigmoid(self.hidden_biases[j] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            })
            .collect()
    }

    fn output_logits(&self, h: &[f64]) -> Vec<f64> {
        let nh = self.n_hidden;
        (0..self.n_classes)
            .map(|c| {
                let w = &self.output_weights[c * nh..(c + 1) * nh];
                self.output_biases[c] + w.iter().zip(h).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.output_logits(&self.hidden(x));
        softmax_in_place(&mut z);
        z
    }

    fn all_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

/// Mean cross-entropy over rows of `x` (row-major) and its gradient.
pub fn objective(params: &NetworkParams, x: &[f64], y: &[usize]) -> (f64, NetworkParams) {
    let (f, nh, k) = (params.n_features, params.n_hidden, params.n_classes);
    let mut grad = NetworkParams::zeros(f, nh, k);
    let mut loss = 0.0;
    let mut delta_h = vec![0.0; nh];
    for (i, &label) in y.iter().enumerate() {
        let row = &x[i * f..(i + 1) * f];
        let h = params.hidden(row);
        let z = params.output_logits(&h);
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - z[label];

        delta_h.iter_mut().for_each(|d| *d = 0.0);
        for (c, zc) in z.iter().enumerate() {
            let delta = (zc - lse).exp() - if c == label { 1.0 } else { 0.0 };
            grad.output_biases[c] += delta;
            for j in 0..nh {
                grad.output_weights[c * nh + j] += delta * h[j];
                delta_h[j] += delta * params.output_weights[c * nh + j];
            }
        }
        for j in 0..nh {
            let d = delta_h[j] * h[j] * (1.0 - h[j]);
            grad.hidden_biases[j] += d;
            for (g, v) in grad.hidden_weights[j * f..(j + 1) * f].iter_mut().zip(row) {
                *g += d * v;
            }
        }
    }
    let inv = 1.0 / y.len().max(1) as f64;
    for b in grad.blocks_mut() {
        b.iter_mut().for_each(|g| *g *= inv);
    }
    (loss * inv, grad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredNetworkPayload {
    pub params: NetworkParams,
    pub standardizer: Standardizer,
}

impl LayeredNetworkPayload {
    pub(crate) fn score(&self, row: &[f64]) -> Vec<f64> {
        self.params.probabilities(&self.standardizer.apply(row))
    }
}

pub fn default_hidden(n_features: usize, n_classes: usize) -> usize {
    (n_features + n_classes).div_ceil(2).max(1)
}

pub fn train_mlp(data: &TraceDataset, params: &MlpParams, seed: u64) -> Result<TrainedModel> {
    require_nonempty(data)?;
    if params.epochs == 0 || !(params.learning_rate > 0.0 && params.momentum >= 0.0) {
        return Err(Error::InvalidArgument(
            "mlp needs epochs >= 1, a positive learning rate and non-negative momentum".into(),
        ));
    }
    if params.hidden == Some(0) {
        return Err(Error::InvalidArgument("mlp needs at least one hidden unit".into()));
    }
    let (classes, y) = encode_labels(data);
    let hidden = params
        .hidden
        .unwrap_or_else(|| default_hidden(data.n_features(), classes.len()));
    let standardizer = Standardizer::fit(data);
    let x = standardizer.apply_all(data);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = NetworkParams::random(data.n_features(), hidden, classes.len(), &mut rng);
    let mut velocity = NetworkParams::zeros(data.n_features(), hidden, classes.len());
    for epoch in 0..params.epochs {
        let (loss, grad) = objective(&net, &x, &y);
        if !loss.is_finite() {
            return Err(Error::Training(format!("mlp loss diverged at epoch {epoch}")));
        }
        for ((w, v), g) in net
            .blocks_mut()
            .into_iter()
            .zip(velocity.blocks_mut())
            .zip(grad.blocks())
        {
            for ((wi, vi), gi) in w.iter_mut().zip(v.iter_mut()).zip(g) {
                *vi = params.momentum * *vi - params.learning_rate * gi;
                *wi += *vi;
            }
        }
    }
    if !net.all_finite() {
        return Err(Error::Training("mlp weights are not finite".into()));
    }
    Ok(TrainedModel {
        class_list: classes,
        feature_names: data.feature_names().to_vec(),
        payload: ModelPayload::LayeredNetwork(LayeredNetworkPayload {
            params: net,
            standardizer,
        }),
    })
}
