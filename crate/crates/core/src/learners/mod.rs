//! Five lightweight classifiers behind one train / score / predict contract.
//!
//! Every model scores a row as a probability vector over its `class_list`
//! (the classes present in its training data, in canonical label order) and
//! predicts the argmax of that vector, ties going to the earlier class.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::TraceDataset;
use crate::error::{Error, Result};
use crate::label::ClassLabel;

pub mod j48;
pub mod jrip;
pub mod logistic;
pub mod mlp;
pub mod oner;

pub use j48::{DecisionTreePayload, J48Params, TreeNode};
pub use jrip::{Condition, JRipParams, Op, Rule, RuleListPayload};
pub use logistic::{LinearLogisticPayload, LogisticParams};
pub use mlp::{LayeredNetworkPayload, MlpParams};
pub use oner::{OneRParams, OneRulePayload};

const FORMAT_MAGIC: &str = "hpc-detect-model";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LearnerKind {
    #[serde(rename = "oner")]
    OneR,
    #[serde(rename = "j48")]
    J48,
    #[serde(rename = "jrip")]
    JRip,
    #[serde(rename = "logistic")]
    Logistic,
    #[serde(rename = "mlp")]
    Mlp,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 5] = [
        LearnerKind::OneR,
        LearnerKind::J48,
        LearnerKind::JRip,
        LearnerKind::Logistic,
        LearnerKind::Mlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::OneR => "oner",
            LearnerKind::J48 => "j48",
            LearnerKind::JRip => "jrip",
            LearnerKind::Logistic => "logistic",
            LearnerKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown learner {s:?}")))
    }
}

/// Hyperparameters for every learner; only the section for the trained
/// kind is read.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparameters {
    pub oner: OneRParams,
    pub j48: J48Params,
    pub jrip: JRipParams,
    pub logistic: LogisticParams,
    pub mlp: MlpParams,
}

pub fn train(
    kind: LearnerKind,
    params: &Hyperparameters,
    data: &TraceDataset,
    seed: u64,
) -> Result<TrainedModel> {
    match kind {
        LearnerKind::OneR => oner::train_oner(data, &params.oner),
        LearnerKind::J48 => j48::train_j48(data, &params.j48),
        LearnerKind::JRip => jrip::train_jrip(data, &params.jrip, seed),
        LearnerKind::Logistic => logistic::train_logistic(data, &params.logistic),
        LearnerKind::Mlp => mlp::train_mlp(data, &params.mlp, seed),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum ModelPayload {
    OneRule(OneRulePayload),
    DecisionTree(DecisionTreePayload),
    RuleList(RuleListPayload),
    LinearLogistic(LinearLogisticPayload),
    LayeredNetwork(LayeredNetworkPayload),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub class_list: Vec<ClassLabel>,
    pub feature_names: Vec<String>,
    pub payload: ModelPayload,
}

impl TrainedModel {
    pub fn kind(&self) -> LearnerKind {
        match self.payload {
            ModelPayload::OneRule(_) => LearnerKind::OneR,
            ModelPayload::DecisionTree(_) => LearnerKind::J48,
            ModelPayload::RuleList(_) => LearnerKind::JRip,
            ModelPayload::LinearLogistic(_) => LearnerKind::Logistic,
            ModelPayload::LayeredNetwork(_) => LearnerKind::Mlp,
        }
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_names.len(),
                actual: row.len(),
            });
        }
        Ok(())
    }

    /// Probability vector over `class_list`.
    pub fn score(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check_row(row)?;
        let k = self.class_list.len();
        Ok(match &self.payload {
            ModelPayload::OneRule(p) => p.score(row, k),
            ModelPayload::DecisionTree(p) => p.score(row, k),
            ModelPayload::RuleList(p) => p.score(row, k),
            ModelPayload::LinearLogistic(p) => p.score(row),
            ModelPayload::LayeredNetwork(p) => p.score(row),
        })
    }

    pub fn predict(&self, row: &[f64]) -> Result<ClassLabel> {
        let s = self.score(row)?;
        Ok(self.class_list[argmax(&s)])
    }

    pub fn predict_all(&self, data: &TraceDataset) -> Result<Vec<ClassLabel>> {
        self.check_features(data)?;
        data.rows().map(|r| self.predict(r)).collect()
    }

    /// Fraction of rows predicted correctly.
    pub fn accuracy(&self, data: &TraceDataset) -> Result<f64> {
        let preds = self.predict_all(data)?;
        let correct = preds.iter().zip(data.labels()).filter(|(p, a)| p == a).count();
        Ok(correct as f64 / data.n_rows().max(1) as f64)
    }

    pub fn check_features(&self, data: &TraceDataset) -> Result<()> {
        if data.feature_names() != self.feature_names.as_slice() {
            return Err(Error::InvalidArgument(format!(
                "dataset features {:?} do not match model features {:?}",
                data.feature_names(),
                self.feature_names
            )));
        }
        Ok(())
    }

    /// Versioned text form: a `hpc-detect-model v1 <kind>` line, then JSON.
    pub fn to_text(&self) -> String {
        let body = serde_json::to_string_pretty(self).expect("model serializes");
        format!("{FORMAT_MAGIC} v{FORMAT_VERSION} {}\n{body}\n", self.kind())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (header, body) = text
            .split_once('\n')
            .ok_or_else(|| Error::ModelFormat("missing header line".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some(FORMAT_MAGIC) {
            return Err(Error::ModelFormat("not a model file".into()));
        }
        let version = parts.next().unwrap_or("");
        if version != format!("v{FORMAT_VERSION}") {
            return Err(Error::ModelFormat(format!("unsupported version {version:?}")));
        }
        let kind: LearnerKind = parts
            .next()
            .ok_or_else(|| Error::ModelFormat("missing kind tag".into()))?
            .parse()?;
        let model: TrainedModel =
            serde_json::from_str(body).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if model.kind() != kind {
            return Err(Error::ModelFormat(format!(
                "header says {kind} but payload is {}",
                model.kind()
            )));
        }
        Ok(model)
    }
}

/// First index of the maximum.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// `(c + 1) / (n + k)` for each count.
pub(crate) fn laplace(counts: &[usize]) -> Vec<f64> {
    let n: usize = counts.iter().sum();
    let denom = (n + counts.len()) as f64;
    counts.iter().map(|&c| (c + 1) as f64 / denom).collect()
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Class list and per-row class indices.
pub(crate) fn encode_labels(data: &TraceDataset) -> (Vec<ClassLabel>, Vec<usize>) {
    let classes = data.classes();
    let y = data
        .labels()
        .iter()
        .map(|l| classes.binary_search(l).expect("label in class list"))
        .collect();
    (classes, y)
}

pub(crate) fn require_nonempty(data: &TraceDataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::InvalidDataset("training set is empty".into()));
    }
    Ok(())
}

/// Per-feature z-scoring fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    /// Population standard deviations; constant features get 1.
    pub stddevs: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &TraceDataset) -> Self {
        let n = data.n_rows().max(1) as f64;
        let w = data.n_features();
        let mut means = vec![0.0; w];
        for row in data.rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; w];
        for row in data.rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let stddevs = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 * (1.0 + sd) && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { means, stddevs }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.means)
            .zip(&self.stddevs)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    /// Standardized rows, flattened row-major.
    pub fn apply_all(&self, data: &TraceDataset) -> Vec<f64> {
        data.rows().flat_map(|r| self.apply(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_ties_go_first() {
        assert_eq!(argmax(&[0.7, 0.3]), 0);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
    }

    #[test]
    fn laplace_arithmetic() {
        assert_eq!(laplace(&[10, 0]), vec![11.0 / 12.0, 1.0 / 12.0]);
        assert_eq!(laplace(&[0, 0, 0]), vec![1.0 / 3.0; 3]);
    }

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let mut z = vec![3.0; 4];
        softmax_in_place(&mut z);
        assert_eq!(z, vec![0.25; 4]);
    }

    #[test]
    fn learner_names_round_trip() {
        for k in LearnerKind::ALL {
            assert_eq!(k.name().parse::<LearnerKind>().unwrap(), k);
        }
        assert!("svm".parse::<LearnerKind>().is_err());
    }
}
