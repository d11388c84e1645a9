//! Independent reference implementations shared by the oracle and
//! acceptance suites.

#![allow(dead_code)]

use hpc_detect::feature_rank::{information_gain, DiscretizationScheme};
use hpc_detect::learners::j48::J48Params;
use hpc_detect::learners::oner::OneRParams;
use hpc_detect::learners::{logistic, mlp, train, Hyperparameters, LearnerKind};
use hpc_detect::metrics::roc_from_scores;
use hpc_detect::{ClassLabel, TraceDataset};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const GAIN_TOL: f64 = 1e-12;
pub const AUC_TOL: f64 = 1e-12;
pub const FD_EPS: f64 = 1e-5;
pub const GRAD_REL_TOL: f64 = 1e-4;
/// Denominator floor for relative gradient error; below it the comparison
/// is effectively absolute.
pub const GRAD_FLOOR: f64 = 1e-6;

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("f{i}")).collect()
}

fn entropy_from_labels(labels: &[usize]) -> f64 {
    let n = labels.len() as f64;
    let mut h = 0.0;
    let mut seen = Vec::new();
    for &l in labels {
        if seen.contains(&l) {
            continue;
        }
        seen.push(l);
        let p = labels.iter().filter(|&&m| m == l).count() as f64 / n;
        h -= p * p.log2();
    }
    h
}

/// Gain by explicit partition of rows into bins.
pub fn brute_force_gain(values: &[f64], labels: &[usize], edges: &[f64]) -> f64 {
    let bin = |v: f64| edges.iter().filter(|&&e| e < v).count();
    let n = values.len() as f64;
    let mut conditional = 0.0;
    for b in 0..=edges.len() {
        let members: Vec<usize> = values
            .iter()
            .zip(labels)
            .filter(|(v, _)| bin(**v) == b)
            .map(|(_, &l)| l)
            .collect();
        if !members.is_empty() {
            conditional += members.len() as f64 / n * entropy_from_labels(&members);
        }
    }
    entropy_from_labels(labels) - conditional
}

/// Fraction of (positive, negative) pairs ordered correctly, ties 1/2.
pub fn mann_whitney(scores: &[f64], positive: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !positive[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if positive[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Worst |gain - oracle| over `trials` random small datasets.
pub fn information_gain_trials(rng: &mut ChaCha8Rng, trials: usize) -> f64 {
    const POOL: [ClassLabel; 3] = [ClassLabel::Benign, ClassLabel::Worm, ClassLabel::Virus];
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = rng.random_range(1..=8);
        let n_classes = rng.random_range(1..=3);
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..n_classes)).collect();
        let mut edges: Vec<f64> = (0..rng.random_range(0..=2))
            .map(|_| rng.random_range(0..12) as f64 / 2.0 - 0.25)
            .collect();
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        let rows = values.iter().map(|&v| vec![v]).collect();
        let data = TraceDataset::new(names(1), rows, labels.iter().map(|&l| POOL[l]).collect()).unwrap();
        let scheme = DiscretizationScheme::from_edges(names(1), vec![edges.clone()]).unwrap();
        let got = information_gain(&data, "f0", &scheme).unwrap();
        worst = worst.max((got - brute_force_gain(&values, &labels, &edges)).abs());
    }
    worst
}

/// Worst |trapezoid AUC - Mann-Whitney| over random tied score sets.
pub fn auc_trials(rng: &mut ChaCha8Rng, trials: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = rng.random_range(2..=50);
        let levels = rng.random_range(1..=10);
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64 / levels as f64).collect();
        let mut positive: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        positive[0] = true;
        positive[1] = false;
        let (_, auc) = roc_from_scores(&scores, &positive).unwrap();
        worst = worst.max((auc - mann_whitney(&scores, &positive)).abs());
    }
    worst
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRAD_FLOOR)
}

fn random_problem(rng: &mut ChaCha8Rng) -> (usize, usize, Vec<f64>, Vec<usize>) {
    let n = rng.random_range(2..=8);
    let f = rng.random_range(1..=4);
    let k = rng.random_range(2..=4);
    let x = (0..n * f).map(|_| rng.random_range(-2.0..2.0)).collect();
    let y = (0..n).map(|_| rng.random_range(0..k)).collect();
    (f, k, x, y)
}

fn central_difference(params: &mut [f64], i: usize, loss: &mut dyn FnMut(&[f64]) -> f64) -> f64 {
    let orig = params[i];
    params[i] = orig + FD_EPS;
    let up = loss(params);
    params[i] = orig - FD_EPS;
    let down = loss(params);
    params[i] = orig;
    (up - down) / (2.0 * FD_EPS)
}

/// Worst relative gradient error of the logistic objective.
pub fn logistic_gradient_trials(rng: &mut ChaCha8Rng, trials: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let (f, k, x, y) = random_problem(rng);
        let ridge = rng.random_range(0.0..0.1);
        let mut p = logistic::LinearParams::zeros(k, f);
        p.weights.iter_mut().chain(p.biases.iter_mut()).for_each(|v| *v = rng.random_range(-1.0..1.0));
        let (_, grad) = logistic::objective(&p, &x, &y, ridge);

        let analytic: Vec<f64> = grad.weights.iter().chain(&grad.biases).copied().collect();
        let mut flat: Vec<f64> = p.weights.iter().chain(&p.biases).copied().collect();
        let mut loss = |v: &[f64]| {
            let mut q = p.clone();
            q.weights.copy_from_slice(&v[..k * f]);
            q.biases.copy_from_slice(&v[k * f..]);
            logistic::objective(&q, &x, &y, ridge).0
        };
        for (i, a) in analytic.iter().enumerate() {
            worst = worst.max(relative_error(*a, central_difference(&mut flat, i, &mut loss)));
        }
    }
    worst
}

fn flatten(p: &mlp::NetworkParams) -> Vec<f64> {
    p.blocks().iter().flat_map(|b| b.iter().copied()).collect()
}

fn unflatten(p: &mut mlp::NetworkParams, v: &[f64]) {
    let mut at = 0;
    for b in p.blocks_mut() {
        let len = b.len();
        b.copy_from_slice(&v[at..at + len]);
        at += len;
    }
}

/// Worst relative gradient error of the MLP objective.
pub fn mlp_gradient_trials(rng: &mut ChaCha8Rng, trials: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let (f, k, x, y) = random_problem(rng);
        let hidden = rng.random_range(1..=4);
        let mut p = mlp::NetworkParams::zeros(f, hidden, k);
        let mut flat: Vec<f64> = flatten(&p).iter().map(|_| rng.random_range(-1.0..1.0)).collect();
        unflatten(&mut p, &flat);
        let (_, grad) = mlp::objective(&p, &x, &y);
        let analytic = flatten(&grad);
        let mut loss = |v: &[f64]| {
            let mut q = p.clone();
            unflatten(&mut q, v);
            mlp::objective(&q, &x, &y).0
        };
        for (i, a) in analytic.iter().enumerate() {
            worst = worst.max(relative_error(*a, central_difference(&mut flat, i, &mut loss)));
        }
    }
    worst
}

/// A dataset of 2 binary features and binary labels, as bit triples.
pub type BitRow = (u8, u8, bool);

/// Every sequence of 1..=`max_rows` rows over the 8 possible bit rows.
pub fn all_bit_datasets(max_rows: usize) -> impl Iterator<Item = Vec<BitRow>> {
    (1..=max_rows).flat_map(|n| {
        (0..8usize.pow(n as u32)).map(move |mut code| {
            (0..n)
                .map(|_| {
                    let c = code % 8;
                    code /= 8;
                    ((c & 1) as u8, ((c >> 1) & 1) as u8, c & 4 != 0)
                })
                .collect()
        })
    })
}

fn to_dataset(rows: &[BitRow]) -> TraceDataset {
    TraceDataset::new(
        names(2),
        rows.iter().map(|&(a, b, _)| vec![a as f64, b as f64]).collect(),
        rows.iter()
            .map(|&(_, _, m)| if m { ClassLabel::Malware } else { ClassLabel::Benign })
            .collect(),
    )
    .unwrap()
}

/// Class list of the dataset, in label order.
fn classes_of(rows: &[BitRow]) -> Vec<bool> {
    let mut c: Vec<bool> = rows.iter().map(|r| r.2).collect();
    c.sort();
    c.dedup();
    c
}

fn counts_over(classes: &[bool], rows: &[&BitRow]) -> Vec<usize> {
    classes.iter().map(|&c| rows.iter().filter(|r| r.2 == c).count()).collect()
}

fn smoothed(counts: &[usize]) -> Vec<f64> {
    let n: usize = counts.iter().sum();
    counts.iter().map(|&c| (c + 1) as f64 / (n + counts.len()) as f64).collect()
}

fn bit(row: &BitRow, f: usize) -> u8 {
    if f == 0 {
        row.0
    } else {
        row.1
    }
}

/// OneR by enumeration of both single-feature rules. Returns the class
/// scores at each of the four possible points.
pub fn oner_oracle(rows: &[BitRow]) -> [Vec<f64>; 4] {
    let classes = classes_of(rows);
    let mut best: Option<(usize, usize)> = None;
    for f in 0..2 {
        let correct: usize = (0..2u8)
            .map(|v| {
                let members: Vec<&BitRow> = rows.iter().filter(|r| bit(r, f) == v).collect();
                counts_over(&classes, &members).into_iter().max().unwrap_or(0)
            })
            .sum();
        if best.is_none_or(|(_, c)| correct > c) {
            best = Some((f, correct));
        }
    }
    let f = best.unwrap().0;
    std::array::from_fn(|p| {
        let v = bit(&((p & 1) as u8, (p >> 1) as u8, false), f);
        let mut members: Vec<&BitRow> = rows.iter().filter(|r| bit(r, f) == v).collect();
        if members.is_empty() {
            // A constant column has one bucket covering every value.
            members = rows.iter().collect();
        }
        smoothed(&counts_over(&classes, &members))
    })
}

fn entropy_of_counts(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.log2()
        })
        .sum()
}

enum OracleTree {
    Leaf(Vec<usize>),
    Split(usize, Box<OracleTree>, Box<OracleTree>),
}

fn grow_oracle(rows: &[&BitRow], classes: &[bool]) -> OracleTree {
    let counts = counts_over(classes, rows);
    if counts.iter().filter(|&&c| c > 0).count() <= 1 || rows.len() < 2 {
        return OracleTree::Leaf(counts);
    }
    let h = entropy_of_counts(&counts);
    let n = rows.len() as f64;
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..2 {
        let (zero, one): (Vec<&BitRow>, Vec<&BitRow>) = rows.iter().partition(|r| bit(r, f) == 0);
        if zero.is_empty() || one.is_empty() {
            continue;
        }
        let (nz, no) = (zero.len() as f64, one.len() as f64);
        let gain = h
            - nz / n * entropy_of_counts(&counts_over(classes, &zero))
            - no / n * entropy_of_counts(&counts_over(classes, &one));
        let split_info = entropy_of_counts(&[zero.len(), one.len()]);
        let ratio = gain / split_info;
        if best.is_none_or(|(_, _, r)| ratio > r + 1e-12) {
            best = Some((f, gain, ratio));
        }
    }
    match best {
        Some((f, gain, _)) if gain > 1e-12 => {
            let (zero, one): (Vec<&BitRow>, Vec<&BitRow>) = rows.iter().partition(|r| bit(r, f) == 0);
            OracleTree::Split(f, Box::new(grow_oracle(&zero, classes)), Box::new(grow_oracle(&one, classes)))
        }
        _ => OracleTree::Leaf(counts),
    }
}

/// J48 (one-row leaves, unbounded depth) by direct recursion on bit
/// partitions. Returns the class scores at each of the four points.
pub fn j48_oracle(rows: &[BitRow]) -> [Vec<f64>; 4] {
    let classes = classes_of(rows);
    let refs: Vec<&BitRow> = rows.iter().collect();
    let tree = grow_oracle(&refs, &classes);
    std::array::from_fn(|p| {
        let point = ((p & 1) as u8, (p >> 1) as u8, false);
        let mut node = &tree;
        loop {
            match node {
                OracleTree::Leaf(c) => return smoothed(c),
                OracleTree::Split(f, zero, one) => node = if bit(&point, *f) == 0 { zero } else { one },
            }
        }
    })
}

pub fn exact_hyperparameters() -> Hyperparameters {
    Hyperparameters {
        oner: OneRParams { bins: 10, min_bucket: 1 },
        j48: J48Params { min_leaf: 1, max_depth: 64 },
        ..Hyperparameters::default()
    }
}

/// Checks OneR and J48 against the oracles on every dataset; returns the
/// number checked or the first mismatch.
pub fn small_learner_trials(datasets: impl Iterator<Item = Vec<BitRow>>) -> Result<usize, String> {
    let hp = exact_hyperparameters();
    let mut checked = 0;
    for rows in datasets {
        let data = to_dataset(&rows);
        for (kind, oracle) in [(LearnerKind::OneR, oner_oracle(&rows)), (LearnerKind::J48, j48_oracle(&rows))] {
            let model = train(kind, &hp, &data, 0).map_err(|e| format!("{kind} on {rows:?}: {e}"))?;
            for (p, want) in oracle.iter().enumerate() {
                let point = [(p & 1) as f64, (p >> 1) as f64];
                let got = model.score(&point).unwrap();
                if &got != want {
                    return Err(format!("{kind} on {rows:?} at {point:?}: got {got:?}, oracle {want:?}"));
                }
            }
        }
        checked += 1;
    }
    Ok(checked)
}
