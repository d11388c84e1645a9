//! OneR: one rule on one feature.
//!
//! Each feature is quantized into equal-frequency buckets (sparse buckets
//! merged into their right neighbour), every bucket predicts its most
//! frequent training class, and the feature whose rule classifies the most
//! training rows correctly wins. Ties go to the lower column index.

use serde::{Deserialize, Serialize};

use super::{argmax, encode_labels, laplace, require_nonempty, ModelPayload, TrainedModel};
use crate::dataset::TraceDataset;
use crate::error::{Error, Result};
use crate::feature_rank::{bin_index, equal_frequency_edges};
use crate::label::ClassLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OneRParams {
    pub bins: usize,
    /// Buckets with fewer rows are merged rightward.
    pub min_bucket: usize,
}

impl Default for OneRParams {
    fn default() -> Self {
        OneRParams {
            bins: 10,
            min_bucket: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneRulePayload {
    pub feature: String,
    pub feature_index: usize,
    pub edges: Vec<f64>,
    pub bin_to_class: Vec<ClassLabel>,
    /// Training class counts per bucket, over the model's class list.
    pub bin_counts: Vec<Vec<usize>>,
    pub training_accuracy: f64,
}

impl OneRulePayload {
    pub(crate) fn score(&self, row: &[f64], _k: usize) -> Vec<f64> {
        let b = bin_index(&self.edges, row[self.feature_index]);
        laplace(&self.bin_counts[b])
    }
}

/// Merges buckets holding fewer than `min_bucket` rows into the next one;
/// a sparse trailing bucket joins its left neighbour.
fn merge_sparse(edges: &[f64], counts: &[Vec<usize>], min_bucket: usize) -> (Vec<f64>, Vec<Vec<usize>>) {
    let k = counts.first().map_or(0, Vec::len);
    let mut new_edges = Vec::new();
    let mut new_counts: Vec<Vec<usize>> = Vec::new();
    let mut acc = vec![0usize; k];
    let last = counts.len() - 1;
    for (b, c) in counts.iter().enumerate() {
        acc.iter_mut().zip(c).for_each(|(a, v)| *a += v);
        if b < last && acc.iter().sum::<usize>() >= min_bucket {
            new_counts.push(std::mem::replace(&mut acc, vec![0; k]));
            new_edges.push(edges[b]);
        }
    }
    if acc.iter().sum::<usize>() >= min_bucket || new_counts.is_empty() {
        new_counts.push(acc);
    } else {
        new_edges.pop();
        let prev = new_counts.last_mut().unwrap();
        prev.iter_mut().zip(&acc).for_each(|(a, v)| *a += v);
    }
    (new_edges, new_counts)
}

struct Candidate {
    edges: Vec<f64>,
    counts: Vec<Vec<usize>>,
    correct: usize,
}

fn rule_for_feature(data: &TraceDataset, y: &[usize], k: usize, f: usize, params: &OneRParams) -> Candidate {
    let column = data.column(f);
    let edges = equal_frequency_edges(&column, params.bins);
    let mut counts = vec![vec![0usize; k]; edges.len() + 1];
    for (v, &c) in column.iter().zip(y) {
        counts[bin_index(&edges, *v)][c] += 1;
    }
    let (edges, counts) = merge_sparse(&edges, &counts, params.min_bucket.max(1));
    let correct = counts.iter().map(|c| c.iter().copied().max().unwrap_or(0)).sum();
    Candidate { edges, counts, correct }
}

pub fn train_oner(data: &TraceDataset, params: &OneRParams) -> Result<TrainedModel> {
    require_nonempty(data)?;
    if params.bins == 0 {
        return Err(Error::InvalidArgument("OneR needs at least one bin".into()));
    }
    if data.n_features() == 0 {
        return Err(Error::InvalidDataset("OneR needs at least one feature".into()));
    }
    let (classes, y) = encode_labels(data);
    let k = classes.len();

    let mut best: Option<(usize, Candidate)> = None;
    for f in 0..data.n_features() {
        let cand = rule_for_feature(data, &y, k, f, params);
        if best.as_ref().is_none_or(|(_, b)| cand.correct > b.correct) {
            best = Some((f, cand));
        }
    }
    let (f, cand) = best.expect("at least one feature");

    let bin_to_class = cand
        .counts
        .iter()
        .map(|c| {
            let as_f64: Vec<f64> = c.iter().map(|&v| v as f64).collect();
            classes[argmax(&as_f64)]
        })
        .collect();
    Ok(TrainedModel {
        class_list: classes,
        feature_names: data.feature_names().to_vec(),
        payload: ModelPayload::OneRule(OneRulePayload {
            feature: data.feature_names()[f].clone(),
            feature_index: f,
            edges: cand.edges,
            bin_to_class,
            bin_counts: cand.counts,
            training_accuracy: cand.correct as f64 / data.n_rows() as f64,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassLabel::*;

    fn payload(m: &TrainedModel) -> &OneRulePayload {
        match &m.payload {
            ModelPayload::OneRule(p) => p,
            _ => unreachable!(),
        }
    }

    fn exact() -> OneRParams {
        OneRParams { bins: 10, min_bucket: 1 }
    }

    #[test]
    fn single_feature_is_selected() {
        let d = TraceDataset::new(vec!["a".into()], vec![vec![1.0], vec![5.0], vec![2.0]], vec![Benign, Worm, Benign]).unwrap();
        let m = train_oner(&d, &exact()).unwrap();
        assert_eq!(payload(&m).feature, "a");
    }

    #[test]
    fn picks_informative_feature() {
        let d = TraceDataset::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 7.0], vec![1.0, 7.0], vec![2.0, 7.0], vec![2.0, 7.0]],
            vec![Malware, Malware, Benign, Benign],
        )
        .unwrap();
        let m = train_oner(&d, &exact()).unwrap();
        let p = payload(&m);
        assert_eq!(p.feature, "a");
        assert_eq!(p.training_accuracy, 1.0);
        assert_eq!(p.bin_to_class, vec![Malware, Benign]);
        assert_eq!(m.accuracy(&d).unwrap(), 1.0);
    }

    #[test]
    fn score_is_smoothed_bucket_frequency() {
        let d = TraceDataset::new(
            vec!["a".into()],
            vec![vec![1.0], vec![1.0], vec![1.0], vec![9.0]],
            vec![Benign, Benign, Malware, Malware],
        )
        .unwrap();
        let m = train_oner(&d, &exact()).unwrap();
        assert_eq!(m.score(&[0.5]).unwrap(), vec![3.0 / 5.0, 2.0 / 5.0]);
        assert_eq!(m.score(&[10.0]).unwrap(), vec![1.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn sparse_buckets_merge_rightward() {
        let counts = vec![vec![2, 0], vec![3, 1], vec![0, 6], vec![1, 0]];
        let (e, c) = merge_sparse(&[1.0, 2.0, 3.0], &counts, 6);
        assert_eq!(c, vec![vec![5, 1], vec![1, 6]]);
        assert_eq!(e, vec![2.0]);
        let (e, c) = merge_sparse(&[1.0], &[vec![1, 0], vec![0, 1]], 6);
        assert!(e.is_empty());
        assert_eq!(c, vec![vec![1, 1]]);
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let d = TraceDataset::new(vec!["a".into()], vec![], vec![]).unwrap();
        assert!(train_oner(&d, &OneRParams::default()).is_err());
    }
}
