use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::ClassLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaskMode {
    #[serde(rename = "binary")]
    Binary,
    #[serde(rename = "multi")]
    Multiclass,
}

impl TaskMode {
    pub fn name(self) -> &'static str {
        match self {
            TaskMode::Binary => "binary",
            TaskMode::Multiclass => "multi",
        }
    }
}

impl fmt::Display for TaskMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "binary" => Ok(TaskMode::Binary),
            "multi" | "multiclass" => Ok(TaskMode::Multiclass),
            other => Err(Error::InvalidArgument(format!("unknown task mode {other:?}"))),
        }
    }
}

/// A table of HPC feature vectors with one class label per row.
///
/// Values are stored row-major. Every value is finite and non-negative,
/// feature names are unique and non-empty, and the task mode is consistent
/// with the labels (a binary dataset only holds `Benign`/`Malware`).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceDataset {
    feature_names: Vec<String>,
    values: Vec<f64>,
    labels: Vec<ClassLabel>,
    task_mode: TaskMode,
}

impl TraceDataset {
    /// Builds a dataset and infers the task mode: binary iff only
    /// benign/malware labels appear.
    pub fn new(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<ClassLabel>,
    ) -> Result<Self> {
        let width = feature_names.len();
        let mut values = Vec::with_capacity(rows.len() * width);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::InvalidDataset(format!(
                    "row {i} has {} values, expected {width}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        let task_mode = infer_task_mode(&labels)?;
        Self::from_parts(feature_names, values, labels, task_mode)
    }

    pub(crate) fn from_parts(
        feature_names: Vec<String>,
        values: Vec<f64>,
        labels: Vec<ClassLabel>,
        task_mode: TaskMode,
    ) -> Result<Self> {
        validate_feature_names(&feature_names)?;
        if values.len() != labels.len() * feature_names.len() {
            return Err(Error::InvalidDataset(format!(
                "{} values for {} rows of {} features",
                values.len(),
                labels.len(),
                feature_names.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            let width = feature_names.len();
            return Err(Error::InvalidDataset(format!(
                "value {} at row {}, feature {:?} is not a finite non-negative number",
                values[pos],
                pos / width,
                feature_names[pos % width]
            )));
        }
        if task_mode == TaskMode::Binary && labels.iter().any(|l| l.is_malware_kind()) {
            return Err(Error::InvalidDataset(
                "binary dataset contains specific malware kinds".into(),
            ));
        }
        if task_mode == TaskMode::Multiclass && labels.contains(&ClassLabel::Malware) {
            return Err(Error::InvalidDataset(
                "multiclass dataset contains the malware super-label".into(),
            ));
        }
        Ok(TraceDataset {
            feature_names,
            values,
            labels,
            task_mode,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn task_mode(&self) -> TaskMode {
        self.task_mode
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    pub fn label(&self, row: usize) -> ClassLabel {
        self.labels[row]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let w = self.n_features();
        &self.values[row * w..(row + 1) * w]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.values[row * self.n_features() + feature]
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.value(i, feature)).collect()
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    /// Per-class row counts, in label order.
    pub fn class_counts(&self) -> BTreeMap<ClassLabel, usize> {
        let mut counts = BTreeMap::new();
        for &l in &self.labels {
            *counts.entry(l).or_insert(0) += 1;
        }
        counts
    }

    /// Distinct labels present, in canonical order.
    pub fn classes(&self) -> Vec<ClassLabel> {
        self.class_counts().into_keys().collect()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> TraceDataset {
        let w = self.n_features();
        let mut values = Vec::with_capacity(indices.len() * w);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            values.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        TraceDataset {
            feature_names: self.feature_names.clone(),
            values,
            labels,
            task_mode: self.task_mode,
        }
    }

    /// Keeps the given columns in the given order. Indices must be distinct.
    pub fn select_columns(&self, columns: &[usize]) -> Result<TraceDataset> {
        let mut seen = HashSet::new();
        for &c in columns {
            if c >= self.n_features() || !seen.insert(c) {
                return Err(Error::InvalidArgument(format!("bad column index {c}")));
            }
        }
        let names = columns.iter().map(|&c| self.feature_names[c].clone()).collect();
        let mut values = Vec::with_capacity(self.n_rows() * columns.len());
        for row in self.rows() {
            values.extend(columns.iter().map(|&c| row[c]));
        }
        Ok(TraceDataset {
            feature_names: names,
            values,
            labels: self.labels.clone(),
            task_mode: self.task_mode,
        })
    }

    /// Restricts to the named features, in the given order.
    pub fn project(&self, names: &[String]) -> Result<TraceDataset> {
        let columns = names
            .iter()
            .map(|n| self.feature_index(n))
            .collect::<Result<Vec<_>>>()?;
        self.select_columns(&columns)
    }

    /// Collapses every malware kind to the `Malware` super-label.
    pub fn to_binary_view(&self) -> TraceDataset {
        TraceDataset {
            feature_names: self.feature_names.clone(),
            values: self.values.clone(),
            labels: self.labels.iter().map(|l| l.binary_view()).collect(),
            task_mode: TaskMode::Binary,
        }
    }

    /// Same features, new labels. Task mode is re-inferred.
    pub fn with_labels(&self, labels: Vec<ClassLabel>) -> Result<TraceDataset> {
        if labels.len() != self.n_rows() {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {} rows",
                labels.len(),
                self.n_rows()
            )));
        }
        let mode = infer_task_mode(&labels)?;
        Self::from_parts(self.feature_names.clone(), self.values.clone(), labels, mode)
    }

    /// Same labels, column `feature` multiplied by `factor`.
    pub fn scale_column(&self, feature: usize, factor: f64) -> Result<TraceDataset> {
        let mut out = self.clone();
        let w = self.n_features();
        for i in 0..self.n_rows() {
            out.values[i * w + feature] *= factor;
        }
        Self::from_parts(out.feature_names, out.values, out.labels, out.task_mode)
    }
}

pub(crate) fn infer_task_mode(labels: &[ClassLabel]) -> Result<TaskMode> {
    let has_super = labels.contains(&ClassLabel::Malware);
    let has_kind = labels.iter().any(|l| l.is_malware_kind());
    match (has_super, has_kind) {
        (true, true) => Err(Error::InvalidDataset(
            "labels mix \"malware\" with specific malware kinds".into(),
        )),
        (_, true) => Ok(TaskMode::Multiclass),
        _ => Ok(TaskMode::Binary),
    }
}

fn validate_feature_names(names: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for n in names {
        if n.is_empty() {
            return Err(Error::InvalidDataset("empty feature name".into()));
        }
        if !seen.insert(n.as_str()) {
            return Err(Error::InvalidDataset(format!("duplicate feature name {n:?}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassLabel::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn infers_mode() {
        let d = TraceDataset::new(names(1), vec![vec![1.0], vec![2.0]], vec![Benign, Malware]).unwrap();
        assert_eq!(d.task_mode(), TaskMode::Binary);
        let d = TraceDataset::new(names(1), vec![vec![1.0], vec![2.0]], vec![Benign, Worm]).unwrap();
        assert_eq!(d.task_mode(), TaskMode::Multiclass);
        assert!(TraceDataset::new(names(1), vec![vec![1.0], vec![2.0]], vec![Malware, Worm]).is_err());
    }

    #[test]
    fn rejects_bad_values_and_names() {
        assert!(TraceDataset::new(names(1), vec![vec![-1.0]], vec![Benign]).is_err());
        assert!(TraceDataset::new(names(1), vec![vec![f64::NAN]], vec![Benign]).is_err());
        assert!(TraceDataset::new(vec!["a".into(), "a".into()], vec![], vec![]).is_err());
        assert!(TraceDataset::new(vec!["".into()], vec![], vec![]).is_err());
        assert!(TraceDataset::new(names(2), vec![vec![1.0]], vec![Benign]).is_err());
    }

    #[test]
    fn binary_view_touches_only_labels() {
        let d = TraceDataset::new(
            names(2),
            vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]],
            vec![Benign, Trojan, Rootkit],
        )
        .unwrap();
        let b = d.to_binary_view();
        assert_eq!(b.labels(), &[Benign, Malware, Malware]);
        assert_eq!(b.task_mode(), TaskMode::Binary);
        assert_eq!(b.values, d.values);
        assert_eq!(b.to_binary_view(), b);
    }

    #[test]
    fn project_by_name() {
        let d = TraceDataset::new(names(3), vec![vec![1.0, 2.0, 3.0]], vec![Benign]).unwrap();
        let p = d.project(&["f2".to_string(), "f0".to_string()]).unwrap();
        assert_eq!(p.row(0), &[3.0, 1.0]);
        assert!(d.project(&["nope".to_string()]).is_err());
    }
}
