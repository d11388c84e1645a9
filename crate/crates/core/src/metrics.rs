//! Confusion matrices, FPR/TPR, ROC curves and AUC.
//!
//! ROC curves sweep the positive-class score from high to low. Rows with
//! equal scores enter together, so ties produce one diagonal segment and the
//! trapezoidal area equals the Mann-Whitney statistic with ties counted 1/2.
//! Multiclass curves are one-vs-rest per class.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::TraceDataset;
use crate::error::{Error, Result};
use crate::label::ClassLabel;
use crate::learners::TrainedModel;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<ClassLabel>,
    /// `counts[actual][predicted]`.
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn from_pairs(classes: Vec<ClassLabel>, actual: &[ClassLabel], predicted: &[ClassLabel]) -> Result<Self> {
        let k = classes.len();
        let mut counts = vec![vec![0; k]; k];
        let index = |l: &ClassLabel| {
            classes
                .iter()
                .position(|c| c == l)
                .ok_or_else(|| Error::InvalidArgument(format!("class {l} not in matrix")))
        };
        for (a, p) in actual.iter().zip(predicted) {
            counts[index(a)?][index(p)?] += 1;
        }
        Ok(ConfusionMatrix { classes, counts })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        let t = self.total();
        if t == 0 {
            0.0
        } else {
            self.correct() as f64 / t as f64
        }
    }

    fn index(&self, class: ClassLabel) -> Result<usize> {
        self.classes
            .iter()
            .position(|&c| c == class)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown class {class}")))
    }

    /// FP / (FP + TN) treating `positive` as the positive class; 0 when there
    /// are no negatives.
    pub fn false_positive_rate(&self, positive: ClassLabel) -> Result<f64> {
        let p = self.index(positive)?;
        let mut fp = 0;
        let mut negatives = 0;
        for (a, row) in self.counts.iter().enumerate() {
            if a == p {
                continue;
            }
            fp += row[p];
            negatives += row.iter().sum::<usize>();
        }
        Ok(if negatives == 0 { 0.0 } else { fp as f64 / negatives as f64 })
    }

    /// TP / (TP + FN); 0 when there are no positives.
    pub fn true_positive_rate(&self, positive: ClassLabel) -> Result<f64> {
        let p = self.index(positive)?;
        let row = &self.counts[p];
        let total: usize = row.iter().sum();
        Ok(if total == 0 { 0.0 } else { row[p] as f64 / total as f64 })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("actual\\predicted");
        for c in &self.classes {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
        for (c, row) in self.classes.iter().zip(&self.counts) {
            out.push_str(c.name());
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn false_positive_rate(cm: &ConfusionMatrix, positive: ClassLabel) -> Result<f64> {
    cm.false_positive_rate(positive)
}

/// Confusion matrix over the union of model and test classes.
pub fn evaluate(model: &TrainedModel, test: &TraceDataset) -> Result<ConfusionMatrix> {
    let predicted = model.predict_all(test)?;
    let mut classes = model.class_list.clone();
    classes.extend(test.classes());
    classes.sort();
    classes.dedup();
    ConfusionMatrix::from_pairs(classes, test.labels(), &predicted)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocSeries {
    pub positive_class: ClassLabel,
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl RocSeries {
    /// `fpr,tpr` lines at 6 decimals, with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fpr,tpr\n");
        for p in &self.points {
            let _ = writeln!(out, "{:.6},{:.6}", p.fpr, p.tpr);
        }
        out
    }
}

pub fn trapezoid_area(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum()
}

/// ROC vertices from raw scores: one vertex per distinct score, starting at
/// (0,0) and ending at (1,1), plus the trapezoidal area.
pub fn roc_from_scores(scores: &[f64], is_positive: &[bool]) -> Result<(Vec<RocPoint>, f64)> {
    if scores.len() != is_positive.len() {
        return Err(Error::InvalidArgument("scores and labels differ in length".into()));
    }
    let n_pos = is_positive.iter().filter(|&&p| p).count();
    let n_neg = is_positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidArgument(
            "ROC needs at least one positive and one negative row".into(),
        ));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("NaN score".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if is_positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        });
    }
    let auc = trapezoid_area(&points);
    Ok((points, auc))
}

fn score_matrix(model: &TrainedModel, test: &TraceDataset) -> Result<Vec<Vec<f64>>> {
    model.check_features(test)?;
    test.rows().map(|r| model.score(r)).collect()
}

fn class_column(model: &TrainedModel, class: ClassLabel) -> Result<usize> {
    model
        .class_list
        .iter()
        .position(|&c| c == class)
        .ok_or_else(|| Error::InvalidArgument(format!("model has no score for class {class}")))
}

pub fn roc_curve(model: &TrainedModel, test: &TraceDataset, positive: ClassLabel) -> Result<RocSeries> {
    let col = class_column(model, positive)?;
    let scores: Vec<f64> = score_matrix(model, test)?.into_iter().map(|s| s[col]).collect();
    let truth: Vec<bool> = test.labels().iter().map(|&l| l == positive).collect();
    let (points, auc) = roc_from_scores(&scores, &truth)?;
    Ok(RocSeries {
        positive_class: positive,
        points,
        auc,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassRoc {
    pub per_class: BTreeMap<ClassLabel, RocSeries>,
    /// Test-set share of each class with a curve.
    pub prevalence: BTreeMap<ClassLabel, f64>,
    pub weighted_auc: f64,
    /// Model classes without a curve (absent from the test set).
    pub omitted: Vec<ClassLabel>,
}

/// Prevalence-weighted mean of the given AUCs, renormalized over the
/// classes present.
pub fn weighted_auc(per_class: &BTreeMap<ClassLabel, f64>, prevalence: &BTreeMap<ClassLabel, f64>) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (c, auc) in per_class {
        let w = prevalence.get(c).copied().unwrap_or(0.0);
        num += w * auc;
        den += w;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

pub fn multiclass_roc(model: &TrainedModel, test: &TraceDataset) -> Result<MulticlassRoc> {
    let present = test.classes();
    if present.len() < 2 {
        return Err(Error::InvalidArgument(
            "multiclass ROC needs at least 2 classes in the test set".into(),
        ));
    }
    let scores = score_matrix(model, test)?;
    let counts = test.class_counts();
    let n = test.n_rows() as f64;

    let mut per_class = BTreeMap::new();
    let mut prevalence = BTreeMap::new();
    let mut omitted = Vec::new();
    for (col, &class) in model.class_list.iter().enumerate() {
        let Some(&count) = counts.get(&class) else {
            omitted.push(class);
            continue;
        };
        let s: Vec<f64> = scores.iter().map(|r| r[col]).collect();
        let truth: Vec<bool> = test.labels().iter().map(|&l| l == class).collect();
        let (points, auc) = roc_from_scores(&s, &truth)?;
        per_class.insert(
            class,
            RocSeries {
                positive_class: class,
                points,
                auc,
            },
        );
        prevalence.insert(class, count as f64 / n);
    }
    let aucs = per_class.iter().map(|(c, s)| (*c, s.auc)).collect();
    Ok(MulticlassRoc {
        weighted_auc: weighted_auc(&aucs, &prevalence),
        per_class,
        prevalence,
        omitted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassLabel::*;

    #[test]
    fn always_benign_model_counts() {
        let actual = [Benign, Benign, Benign, Malware, Malware];
        let cm = ConfusionMatrix::from_pairs(vec![Benign, Malware], &actual, &[Benign; 5]).unwrap();
        assert_eq!(cm.accuracy(), 0.6);
        assert_eq!(cm.counts[1], vec![2, 0]);
        assert_eq!(cm.total(), 5);
        assert_eq!(cm.false_positive_rate(Malware).unwrap(), 0.0);
        assert_eq!(cm.true_positive_rate(Malware).unwrap(), 0.0);
        assert!(cm.false_positive_rate(Worm).is_err());
    }

    #[test]
    fn fpr_extremes_on_all_negative_sets() {
        let actual = [Benign; 4];
        let never = ConfusionMatrix::from_pairs(vec![Benign, Malware], &actual, &[Benign; 4]).unwrap();
        assert_eq!(never.false_positive_rate(Malware).unwrap(), 0.0);
        let always = ConfusionMatrix::from_pairs(vec![Benign, Malware], &actual, &[Malware; 4]).unwrap();
        assert_eq!(always.false_positive_rate(Malware).unwrap(), 1.0);
        // No positives at all: FPR of Benign as positive is 0/0.
        assert_eq!(never.false_positive_rate(Benign).unwrap(), 0.0);
    }

    #[test]
    fn perfect_and_tied_scores() {
        let (pts, auc) = roc_from_scores(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap();
        assert_eq!(auc, 1.0);
        assert_eq!(pts.first().unwrap(), &RocPoint { fpr: 0.0, tpr: 0.0 });
        assert_eq!(pts.last().unwrap(), &RocPoint { fpr: 1.0, tpr: 1.0 });
        let (pts, auc) = roc_from_scores(&[0.5; 4], &[true, false, true, false]).unwrap();
        assert_eq!(auc, 0.5);
        assert_eq!(pts.len(), 2);
        assert!(roc_from_scores(&[0.1, 0.2], &[true, true]).is_err());
    }

    #[test]
    fn csv_format() {
        let s = RocSeries {
            positive_class: Malware,
            points: vec![RocPoint { fpr: 0.0, tpr: 0.0 }, RocPoint { fpr: 1.0, tpr: 1.0 }],
            auc: 0.5,
        };
        assert_eq!(s.to_csv(), "fpr,tpr\n0.000000,0.000000\n1.000000,1.000000\n");
    }
}
