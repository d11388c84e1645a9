//! Entropy, information gain over discretized counters, and top-k ranking.
//!
//! Numeric features are discretized with equal-frequency bins whose edges
//! are computed on the dataset passed in (the training split). A value `v`
//! falls in bin `#{edges e : e < v}`, so values equal to an edge go left.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::TraceDataset;
use crate::error::{Error, Result};

pub const DEFAULT_BIN_COUNT: usize = 10;

/// Shannon entropy in bits of a class-count vector.
pub fn entropy(counts: &[usize]) -> Result<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidArgument("entropy of all-zero counts".into()));
    }
    Ok(entropy_of(counts, total))
}

pub(crate) fn entropy_of(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

/// Equal-frequency cut points for `values`.
///
/// Targets the `j * n / bins` order statistics and snaps each to the nearest
/// boundary between distinct sorted values, so ties never straddle a cut.
/// Returned edges are strictly ascending midpoints.
pub fn equal_frequency_edges(values: &[f64], bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let boundaries: Vec<usize> = (1..n).filter(|&b| sorted[b - 1] < sorted[b]).collect();
    if boundaries.is_empty() || bins < 2 {
        return Vec::new();
    }
    let mut chosen = Vec::new();
    for j in 1..bins {
        let target = j as f64 * n as f64 / bins as f64;
        let idx = boundaries.partition_point(|&b| (b as f64) < target);
        let pick = match (idx.checked_sub(1).map(|i| boundaries[i]), boundaries.get(idx)) {
            (Some(lo), Some(&hi)) => {
                if target - lo as f64 <= hi as f64 - target {
                    lo
                } else {
                    hi
                }
            }
            (Some(lo), None) => lo,
            (None, Some(&hi)) => hi,
            (None, None) => unreachable!(),
        };
        chosen.push(pick);
    }
    chosen.sort_unstable();
    chosen.dedup();
    chosen
        .into_iter()
        .map(|b| sorted[b - 1] + (sorted[b] - sorted[b - 1]) / 2.0)
        .collect()
}

pub fn bin_index(edges: &[f64], value: f64) -> usize {
    edges.partition_point(|&e| e < value)
}

/// Per-feature bin edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationScheme {
    pub bin_count: usize,
    feature_names: Vec<String>,
    edges: Vec<Vec<f64>>,
}

impl DiscretizationScheme {
    pub fn equal_frequency(data: &TraceDataset, bin_count: usize) -> Result<Self> {
        if bin_count == 0 {
            return Err(Error::InvalidArgument("bin count must be positive".into()));
        }
        let edges = (0..data.n_features())
            .map(|f| equal_frequency_edges(&data.column(f), bin_count))
            .collect();
        Ok(DiscretizationScheme {
            bin_count,
            feature_names: data.feature_names().to_vec(),
            edges,
        })
    }

    /// A scheme from explicit edges; each list must be strictly ascending.
    pub fn from_edges(feature_names: Vec<String>, edges: Vec<Vec<f64>>) -> Result<Self> {
        if feature_names.len() != edges.len() {
            return Err(Error::InvalidArgument("one edge list per feature required".into()));
        }
        for (name, e) in feature_names.iter().zip(&edges) {
            if e.iter().any(|v| !v.is_finite()) || e.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "edges for {name:?} are not strictly ascending"
                )));
            }
        }
        let bin_count = edges.iter().map(|e| e.len() + 1).max().unwrap_or(1);
        Ok(DiscretizationScheme {
            bin_count,
            feature_names,
            edges,
        })
    }

    pub fn edges(&self, feature: &str) -> Result<&[f64]> {
        self.feature_names
            .iter()
            .position(|n| n == feature)
            .map(|i| self.edges[i].as_slice())
            .ok_or_else(|| Error::UnknownFeature(feature.to_string()))
    }
}

/// Class index per row, against `data.classes()`.
fn class_indices(data: &TraceDataset) -> (usize, Vec<usize>) {
    let classes = data.classes();
    let idx = data
        .labels()
        .iter()
        .map(|l| classes.binary_search(l).unwrap())
        .collect();
    (classes.len(), idx)
}

fn gain_for_column(
    data: &TraceDataset,
    feature: usize,
    edges: &[f64],
    n_classes: usize,
    class_idx: &[usize],
    base_entropy: f64,
) -> f64 {
    let n_bins = edges.len() + 1;
    let mut table = vec![0usize; n_bins * n_classes];
    for (row, &c) in class_idx.iter().enumerate() {
        let b = bin_index(edges, data.value(row, feature));
        table[b * n_classes + c] += 1;
    }
    let n = class_idx.len() as f64;
    let conditional: f64 = table
        .chunks(n_classes)
        .map(|counts| {
            let nb: usize = counts.iter().sum();
            nb as f64 / n * entropy_of(counts, nb)
        })
        .sum();
    (base_entropy - conditional).clamp(0.0, base_entropy)
}

/// `H(labels) - sum_b (n_b / n) H(labels | bin b)` for one feature.
pub fn information_gain(
    data: &TraceDataset,
    feature: &str,
    scheme: &DiscretizationScheme,
) -> Result<f64> {
    let f = data.feature_index(feature)?;
    let edges = scheme.edges(feature)?;
    if data.is_empty() {
        return Ok(0.0);
    }
    let (k, idx) = class_indices(data);
    let mut counts = vec![0usize; k];
    for &c in &idx {
        counts[c] += 1;
    }
    let h = entropy_of(&counts, idx.len());
    Ok(gain_for_column(data, f, edges, k, &idx, h))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub name: String,
    /// Column index in the ranked dataset.
    pub index: usize,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    /// Gain descending, ties by column index.
    pub entries: Vec<RankedFeature>,
    pub dataset_entropy: f64,
}

impl FeatureRanking {
    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.name.clone()).collect()
    }

    pub fn top(&self, k: usize) -> Vec<String> {
        self.entries.iter().take(k).map(|e| e.name.clone()).collect()
    }

    /// `rank,feature_name,gain` with gains at 6 decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,feature_name,gain\n");
        for (i, e) in self.entries.iter().enumerate() {
            let _ = writeln!(out, "{},{},{:.6}", i + 1, e.name, e.gain);
        }
        out
    }
}

/// Ranks every feature by information gain. Pass the training split only.
pub fn rank_features(data: &TraceDataset, scheme: &DiscretizationScheme) -> Result<FeatureRanking> {
    if data.is_empty() {
        return Err(Error::InvalidDataset("cannot rank features of an empty dataset".into()));
    }
    let (k, idx) = class_indices(data);
    let mut counts = vec![0usize; k];
    for &c in &idx {
        counts[c] += 1;
    }
    let h = entropy_of(&counts, idx.len());
    let edges = data
        .feature_names()
        .iter()
        .map(|n| scheme.edges(n))
        .collect::<Result<Vec<_>>>()?;
    let mut entries: Vec<RankedFeature> = (0..data.n_features())
        .into_par_iter()
        .map(|f| RankedFeature {
            name: data.feature_names()[f].clone(),
            index: f,
            gain: gain_for_column(data, f, edges[f], k, &idx, h),
        })
        .collect();
    entries.sort_by(|a, b| b.gain.total_cmp(&a.gain).then(a.index.cmp(&b.index)));
    Ok(FeatureRanking {
        entries,
        dataset_entropy: h,
    })
}

/// Restricts `data` to the `k` best-ranked features, in rank order.
pub fn select_top_k(data: &TraceDataset, ranking: &FeatureRanking, k: usize) -> Result<TraceDataset> {
    if k == 0 || k > ranking.entries.len() || k > data.n_features() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside 1..={}",
            ranking.entries.len().min(data.n_features())
        )));
    }
    data.project(&ranking.top(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::ClassLabel::{self, *};

    fn ds(cols: Vec<Vec<f64>>, labels: Vec<ClassLabel>) -> TraceDataset {
        let names = (0..cols.len()).map(|i| format!("f{i}")).collect();
        let rows = (0..labels.len()).map(|r| cols.iter().map(|c| c[r]).collect()).collect();
        TraceDataset::new(names, rows, labels).unwrap()
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy(&[2, 2]).unwrap(), 1.0);
        assert_eq!(entropy(&[4, 0]).unwrap(), 0.0);
        // -(9/14)log2(9/14) - (5/14)log2(5/14)
        assert!((entropy(&[9, 5]).unwrap() - 0.940_285_958_670_631).abs() < 1e-12);
        assert!(entropy(&[0, 0]).is_err());
        assert_eq!(entropy(&[3, 7]).unwrap(), entropy(&[7, 3]).unwrap());
    }

    #[test]
    fn edges_snap_to_value_boundaries() {
        assert_eq!(equal_frequency_edges(&[1.0, 1.0, 2.0, 2.0], 10), vec![1.5]);
        assert!(equal_frequency_edges(&[3.0; 5], 10).is_empty());
        let skewed: Vec<f64> = (0..100).map(|i| if i < 97 { 0.0 } else { 1.0 }).collect();
        assert_eq!(equal_frequency_edges(&skewed, 10), vec![0.5]);
        let uniform: Vec<f64> = (0..100).map(f64::from).collect();
        let e = equal_frequency_edges(&uniform, 4);
        assert_eq!(e, vec![24.5, 49.5, 74.5]);
        assert_eq!(bin_index(&e, 24.5), 0);
        assert_eq!(bin_index(&e, 24.6), 1);
        assert_eq!(bin_index(&e, 1e9), 3);
    }

    #[test]
    fn gain_of_constant_and_perfect_features() {
        let d = ds(vec![vec![5.0; 4], vec![1.0, 1.0, 2.0, 2.0]], vec![Malware, Malware, Benign, Benign]);
        let s = DiscretizationScheme::equal_frequency(&d, 10).unwrap();
        assert_eq!(information_gain(&d, "f0", &s).unwrap(), 0.0);
        assert_eq!(information_gain(&d, "f1", &s).unwrap(), 1.0);
        assert!(information_gain(&d, "nope", &s).is_err());
    }

    #[test]
    fn ranking_orders_by_gain_then_index() {
        let d = ds(vec![vec![5.0; 4], vec![1.0, 1.0, 2.0, 2.0]], vec![Malware, Malware, Benign, Benign]);
        let s = DiscretizationScheme::equal_frequency(&d, 10).unwrap();
        let r = rank_features(&d, &s).unwrap();
        assert_eq!(r.names(), vec!["f1", "f0"]);
        assert_eq!(r.entries[0].gain, r.dataset_entropy);
        assert_eq!(r.entries[1].gain, 0.0);
        assert_eq!(r.to_csv(), "rank,feature_name,gain\n1,f1,1.000000\n2,f0,0.000000\n");

        let tied = ds(vec![vec![1.0; 4], vec![2.0; 4]], vec![Benign, Malware, Benign, Malware]);
        let s = DiscretizationScheme::equal_frequency(&tied, 10).unwrap();
        assert_eq!(rank_features(&tied, &s).unwrap().names(), vec!["f0", "f1"]);
    }

    #[test]
    fn top_k_bounds() {
        let d = ds(vec![vec![5.0; 4], vec![1.0, 1.0, 2.0, 2.0]], vec![Malware, Malware, Benign, Benign]);
        let s = DiscretizationScheme::equal_frequency(&d, 10).unwrap();
        let r = rank_features(&d, &s).unwrap();
        assert!(select_top_k(&d, &r, 0).is_err());
        assert!(select_top_k(&d, &r, 3).is_err());
        let all = select_top_k(&d, &r, 2).unwrap();
        assert_eq!(all.feature_names(), &["f1".to_string(), "f0".to_string()]);
        assert_eq!(all.row(0), &[1.0, 5.0]);
    }

    #[test]
    fn explicit_edges_validated() {
        assert!(DiscretizationScheme::from_edges(vec!["a".into()], vec![vec![2.0, 1.0]]).is_err());
        assert!(DiscretizationScheme::from_edges(vec!["a".into()], vec![vec![1.0, 2.0]]).is_ok());
    }
}
