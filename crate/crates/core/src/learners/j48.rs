//! C4.5-style decision tree with binary numeric splits chosen by gain ratio.

use serde::{Deserialize, Serialize};

use super::{encode_labels, laplace, require_nonempty, ModelPayload, TrainedModel};
use crate::dataset::TraceDataset;
use crate::error::{Error, Result};
use crate::feature_rank::entropy_of;

/// Gain ratios closer than this are ties; the earlier candidate wins.
pub(crate) const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct J48Params {
    /// Minimum rows on each side of a split.
    pub min_leaf: usize,
    pub max_depth: usize,
}

impl Default for J48Params {
    fn default() -> Self {
        J48Params {
            min_leaf: 2,
            max_depth: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    /// `value <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    /// Training class counts over the model's class list.
    Leaf { counts: Vec<usize> },
}

impl TreeNode {
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    pub fn leaf_for(&self, row: &[f64]) -> &[usize] {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { counts } => return counts,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if row[*feature] <= *threshold { left } else { right },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTreePayload {
    pub root: TreeNode,
}

impl DecisionTreePayload {
    pub(crate) fn score(&self, row: &[f64], _k: usize) -> Vec<f64> {
        laplace(self.root.leaf_for(row))
    }
}

/// `Gain / SplitInfo`; zero when the split carries no information.
pub fn gain_ratio(gain: f64, split_info: f64) -> f64 {
    if split_info <= 0.0 {
        0.0
    } else {
        gain / split_info
    }
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
    ratio: f64,
}

struct Builder<'a> {
    data: &'a TraceDataset,
    y: &'a [usize],
    k: usize,
    params: &'a J48Params,
}

impl Builder<'_> {
    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.k];
        for &r in rows {
            c[self.y[r]] += 1;
        }
        c
    }

    fn best_split(&self, rows: &[usize], parent: &[usize]) -> Option<BestSplit> {
        let n = rows.len();
        let nf = n as f64;
        let h_parent = entropy_of(parent, n);
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<BestSplit> = None;
        let mut sorted = rows.to_vec();
        for f in 0..self.data.n_features() {
            sorted.sort_by(|&a, &b| self.data.value(a, f).total_cmp(&self.data.value(b, f)));
            let mut left = vec![0usize; self.k];
            for i in 0..n - 1 {
                left[self.y[sorted[i]]] += 1;
                let lo = self.data.value(sorted[i], f);
                let hi = self.data.value(sorted[i + 1], f);
                let n_left = i + 1;
                if lo == hi || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let right: Vec<usize> = parent.iter().zip(&left).map(|(p, l)| p - l).collect();
                let n_right = n - n_left;
                let children = n_left as f64 / nf * entropy_of(&left, n_left)
                    + n_right as f64 / nf * entropy_of(&right, n_right);
                let gain = h_parent - children;
                let split_info = entropy_of(&[n_left, n_right], n);
                let ratio = gain_ratio(gain, split_info);
                if best.as_ref().is_none_or(|b| ratio > b.ratio + TIE_EPS) {
                    best = Some(BestSplit {
                        feature: f,
                        threshold: lo + (hi - lo) / 2.0,
                        gain,
                        ratio,
                    });
                }
            }
        }
        best
    }

    fn build(&self, rows: &[usize], depth: usize) -> TreeNode {
        let counts = self.counts(rows);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || rows.len() < 2 * self.params.min_leaf.max(1) || depth >= self.params.max_depth {
            return TreeNode::Leaf { counts };
        }
        let Some(split) = self.best_split(rows, &counts) else {
            return TreeNode::Leaf { counts };
        };
        if split.gain <= TIE_EPS {
            return TreeNode::Leaf { counts };
        }
        let (left, right): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.data.value(r, split.feature) <= split.threshold);
        TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.build(&left, depth + 1)),
            right: Box::new(self.build(&right, depth + 1)),
        }
    }
}

pub fn train_j48(data: &TraceDataset, params: &J48Params) -> Result<TrainedModel> {
    require_nonempty(data)?;
    if params.min_leaf == 0 || params.max_depth == 0 {
        return Err(Error::InvalidArgument("min_leaf and max_depth must be positive".into()));
    }
    let (classes, y) = encode_labels(data);
    let builder = Builder {
        data,
        y: &y,
        k: classes.len(),
        params,
    };
    let rows: Vec<usize> = (0..data.n_rows()).collect();
    let root = builder.build(&rows, 0);
    Ok(TrainedModel {
        class_list: classes,
        feature_names: data.feature_names().to_vec(),
        payload: ModelPayload::DecisionTree(DecisionTreePayload { root }),
    })
}
