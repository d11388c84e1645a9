//! Seeded stratified train/test partitioning.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::TraceDataset;
use crate::error::{Error, Result};
use crate::label::ClassLabel;

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: TraceDataset,
    pub test: TraceDataset,
    pub seed: u64,
    pub train_fraction: f64,
    /// Source row indices of `train`, ascending.
    pub train_indices: Vec<usize>,
    /// Source row indices of `test`, ascending.
    pub test_indices: Vec<usize>,
}

/// Per-class train counts.
///
/// Each class gets `floor(fraction * n_c)`; the rows left over to reach
/// `round(fraction * n)` go to the classes with the largest fractional parts,
/// ties by class name. Counts are then clamped to `[1, n_c - 1]` so both
/// sides hold every class.
pub fn train_counts(
    class_counts: &BTreeMap<ClassLabel, usize>,
    fraction: f64,
) -> BTreeMap<ClassLabel, usize> {
    let total: usize = class_counts.values().sum();
    let target = (fraction * total as f64 + 0.5 + 1e-9).floor() as usize;

    let mut counts = BTreeMap::new();
    let mut remainders = Vec::new();
    for (&label, &n) in class_counts {
        let exact = fraction * n as f64;
        let base = (exact + 1e-9).floor();
        counts.insert(label, base as usize);
        remainders.push((label, (exact - base).max(0.0)));
    }
    remainders.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.name().cmp(b.0.name())));

    let assigned: usize = counts.values().sum();
    for (label, frac) in remainders.into_iter().take(target.saturating_sub(assigned)) {
        if frac > 0.0 {
            *counts.get_mut(&label).unwrap() += 1;
        }
    }
    for (label, c) in counts.iter_mut() {
        let n = class_counts[label];
        *c = (*c).clamp(1, n - 1);
    }
    counts
}

pub fn stratified_split(data: &TraceDataset, train_fraction: f64, seed: u64) -> Result<SplitPair> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Split(format!(
            "train fraction {train_fraction} must lie strictly between 0 and 1"
        )));
    }
    let mut by_class: BTreeMap<ClassLabel, Vec<usize>> = BTreeMap::new();
    for (i, &l) in data.labels().iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    if by_class.len() < 2 {
        return Err(Error::Split(
            "fewer than 2 classes present; a class is absent so a stratified split is impossible"
                .into(),
        ));
    }
    if let Some((label, rows)) = by_class.iter().find(|(_, rows)| rows.len() < 2) {
        return Err(Error::Split(format!(
            "class {label} has {} row(s); at least 2 are required",
            rows.len()
        )));
    }

    let class_counts = by_class.iter().map(|(l, r)| (*l, r.len())).collect();
    let quotas = train_counts(&class_counts, train_fraction);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_indices = Vec::new();
    let mut test_indices = Vec::new();
    for (label, mut rows) in by_class {
        rows.shuffle(&mut rng);
        let k = quotas[&label];
        train_indices.extend_from_slice(&rows[..k]);
        test_indices.extend_from_slice(&rows[k..]);
    }
    train_indices.sort_unstable();
    test_indices.sort_unstable();

    Ok(SplitPair {
        train: data.subset(&train_indices),
        test: data.subset(&test_indices),
        seed,
        train_fraction,
        train_indices,
        test_indices,
    })
}
