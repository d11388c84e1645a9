//! Multinomial logistic regression trained by full-batch gradient descent.
//!
//! With two classes the softmax over `(z_0, z_1)` equals the sigmoid
//! `1 / (1 + exp(-(z_1 - z_0)))`, the usual bias-plus-linear-term form.

use serde::{Deserialize, Serialize};

use super::{encode_labels, require_nonempty, softmax_in_place, ModelPayload, Standardizer, TrainedModel};
use crate::dataset::TraceDataset;
use crate::error::{Error, Result};

const GRAD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub ridge: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            learning_rate: 0.5,
            epochs: 500,
            ridge: 1e-8,
        }
    }
}

/// Weights (classes x features, row-major) and per-class biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub n_classes: usize,
    pub n_features: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl LinearParams {
    pub fn zeros(n_classes: usize, n_features: usize) -> Self {
        LinearParams {
            n_classes,
            n_features,
            weights: vec![0.0; n_classes * n_features],
            biases: vec![0.0; n_classes],
        }
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_classes)
            .map(|c| {
                let w = &self.weights[c * self.n_features..(c + 1) * self.n_features];
                self.biases[c] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.logits(x);
        softmax_in_place(&mut z);
        z
    }

    pub fn max_abs(&self) -> f64 {
        self.weights.iter().chain(&self.biases).fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Mean cross-entropy plus `ridge / 2 * |W|^2` (biases unpenalized), and its
/// gradient. `x` is row-major with `params.n_features` columns.
pub fn objective(params: &LinearParams, x: &[f64], y: &[usize], ridge: f64) -> (f64, LinearParams) {
    let f = params.n_features;
    let n = y.len();
    let mut grad = LinearParams::zeros(params.n_classes, f);
    let mut loss = 0.0;
    for (i, &label) in y.iter().enumerate() {
        let row = &x[i * f..(i + 1) * f];
        let z = params.logits(row);
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - z[label];
        let p: Vec<f64> = z.iter().map(|v| (v - lse).exp()).collect();
        for (c, pc) in p.iter().enumerate() {
            let delta = pc - if c == label { 1.0 } else { 0.0 };
            grad.biases[c] += delta;
            let gw = &mut grad.weights[c * f..(c + 1) * f];
            for (g, v) in gw.iter_mut().zip(row) {
                *g += delta * v;
            }
        }
    }
    let inv = 1.0 / n.max(1) as f64;
    loss *= inv;
    grad.biases.iter_mut().for_each(|g| *g *= inv);
    for (g, w) in grad.weights.iter_mut().zip(&params.weights) {
        *g = *g * inv + ridge * w;
    }
    loss += 0.5 * ridge * params.weights.iter().map(|w| w * w).sum::<f64>();
    (loss, grad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearLogisticPayload {
    pub params: LinearParams,
    pub standardizer: Standardizer,
}

impl LinearLogisticPayload {
    pub(crate) fn score(&self, row: &[f64]) -> Vec<f64> {
        self.params.probabilities(&self.standardizer.apply(row))
    }
}

pub fn train_logistic(data: &TraceDataset, params: &LogisticParams) -> Result<TrainedModel> {
    require_nonempty(data)?;
    let (classes, y) = encode_labels(data);
    if classes.len() < 2 {
        return Err(Error::InvalidDataset("logistic regression needs at least 2 classes".into()));
    }
    if params.epochs == 0 || !(params.learning_rate > 0.0 && params.ridge >= 0.0) {
        return Err(Error::InvalidArgument(
            "logistic needs epochs >= 1, a positive learning rate and a non-negative ridge".into(),
        ));
    }
    let standardizer = Standardizer::fit(data);
    let x = standardizer.apply_all(data);
    let mut w = LinearParams::zeros(classes.len(), data.n_features());
    for epoch in 0..params.epochs {
        let (loss, grad) = objective(&w, &x, &y, params.ridge);
        if !loss.is_finite() {
            return Err(Error::Training(format!("logistic loss diverged at epoch {epoch}")));
        }
        if grad.max_abs() < GRAD_TOL {
            break;
        }
        for (p, g) in w.weights.iter_mut().zip(&grad.weights) {
            *p -= params.learning_rate * g;
        }
        for (p, g) in w.biases.iter_mut().zip(&grad.biases) {
            *p -= params.learning_rate * g;
        }
    }
    if !w.max_abs().is_finite() {
        return Err(Error::Training("logistic weights are not finite".into()));
    }
    Ok(TrainedModel {
        class_list: classes,
        feature_names: data.feature_names().to_vec(),
        payload: ModelPayload::LinearLogistic(LinearLogisticPayload { params: w, standardizer }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::ClassLabel::*;

    #[test]
    fn zero_weights_score_uniform() {
        let p = LinearParams::zeros(2, 3);
        assert_eq!(p.probabilities(&[1.0, -4.0, 9.0]), vec![0.5, 0.5]);
        let p = LinearParams::zeros(6, 3);
        assert!(p.probabilities(&[1.0, 2.0, 3.0]).iter().all(|&v| (v - 1.0 / 6.0).abs() < 1e-15));
    }

    #[test]
    fn two_class_softmax_is_sigmoid() {
        let p = LinearParams {
            n_classes: 2,
            n_features: 2,
            weights: vec![0.3, -1.2, -0.7, 2.0],
            biases: vec![0.1, -0.4],
        };
        let x = [0.8, 1.5];
        let z = p.logits(&x);
        let sigmoid = 1.0 / (1.0 + (-(z[1] - z[0])).exp());
        assert!((p.probabilities(&x)[1] - sigmoid).abs() < 1e-15);
    }

    #[test]
    fn separable_one_dimensional() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![if i < 10 { i as f64 } else { 15.0 + i as f64 }]).collect();
        let labels = (0..20).map(|i| if i < 10 { Benign } else { Malware }).collect();
        let d = TraceDataset::new(vec!["f".into()], rows, labels).unwrap();
        let params = LogisticParams { learning_rate: 0.1, epochs: 500, ridge: 1e-8 };
        let m = train_logistic(&d, &params).unwrap();
        assert_eq!(m.accuracy(&d).unwrap(), 1.0);
    }

    #[test]
    fn diverging_rate_is_reported() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let labels = (0..20).map(|i| if i % 3 == 0 { Benign } else { Malware }).collect();
        let d = TraceDataset::new(vec!["a".into(), "b".into()], rows, labels).unwrap();
        let params = LogisticParams { learning_rate: f64::MAX, epochs: 50, ridge: 1e-8 };
        assert!(matches!(train_logistic(&d, &params), Err(Error::Training(_))));
    }
}
