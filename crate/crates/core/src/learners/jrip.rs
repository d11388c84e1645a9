//! RIPPER-style ordered rule list.
//!
//! Classes are handled from least to most prevalent; the most prevalent one
//! becomes the default. For each other class, rules are grown on a seeded
//! 2/3 split of the remaining rows by FOIL gain, pruned on the other 1/3 by
//! `(p - n) / (p + n)`, and kept while their prune-set error stays at or
//! below 50%. Optimization passes then try a fresh replacement and an
//! extended revision of each rule and keep whichever scores best on a new
//! prune split.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{encode_labels, laplace, ModelPayload, TrainedModel};
use crate::dataset::TraceDataset;
use crate::error::{Error, Result};
use crate::label::ClassLabel;

const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JRipParams {
    pub optimization_passes: usize,
    /// Minimum grow-set positives a condition must keep covered.
    pub min_coverage: usize,
}

impl Default for JRipParams {
    fn default() -> Self {
        JRipParams {
            optimization_passes: 2,
            min_coverage: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Op {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub feature: usize,
    pub op: Op,
    pub threshold: f64,
}

impl Condition {
    pub fn matches(&self, row: &[f64]) -> bool {
        match self.op {
            Op::Le => row[self.feature] <= self.threshold,
            Op::Gt => row[self.feature] > self.threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub conditions: Vec<Condition>,
    pub class: ClassLabel,
    /// Training rows first-matched by this rule, per class of the model.
    pub coverage: Vec<usize>,
}

impl Rule {
    pub fn matches(&self, row: &[f64]) -> bool {
        self.conditions.iter().all(|c| c.matches(row))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleListPayload {
    pub rules: Vec<Rule>,
    pub default_class: ClassLabel,
    /// Training rows matched by no rule, per class.
    pub default_coverage: Vec<usize>,
}

impl RuleListPayload {
    /// Index of the first matching rule, `None` for the default.
    pub fn firing_rule(&self, row: &[f64]) -> Option<usize> {
        self.rules.iter().position(|r| r.matches(row))
    }

    pub(crate) fn score(&self, row: &[f64], _k: usize) -> Vec<f64> {
        match self.firing_rule(row) {
            Some(i) => laplace(&self.rules[i].coverage),
            None => laplace(&self.default_coverage),
        }
    }
}

fn covers(conds: &[Condition], data: &TraceDataset, row: usize) -> bool {
    let r = data.row(row);
    conds.iter().all(|c| c.matches(r))
}

/// Rows of one class-vs-rest problem, partitioned into positives and negatives.
#[derive(Default, Clone)]
struct Sample {
    pos: Vec<usize>,
    neg: Vec<usize>,
}

impl Sample {
    fn of(rows: &[usize], y: &[usize], target: usize) -> Self {
        let (pos, neg) = rows.iter().partition(|&&r| y[r] == target);
        Sample { pos, neg }
    }

    fn coverage(&self, conds: &[Condition], data: &TraceDataset) -> (usize, usize) {
        let p = self.pos.iter().filter(|&&r| covers(conds, data, r)).count();
        let n = self.neg.iter().filter(|&&r| covers(conds, data, r)).count();
        (p, n)
    }

    /// Seeded 2/3 grow, 1/3 prune split, stratified by sign.
    fn grow_prune(&self, rng: &mut ChaCha8Rng) -> (Sample, Sample) {
        let split = |rows: &[usize], rng: &mut ChaCha8Rng| {
            let mut v = rows.to_vec();
            v.shuffle(rng);
            let g = (2 * v.len()).div_ceil(3);
            let prune = v.split_off(g);
            (v, prune)
        };
        let (gp, pp) = split(&self.pos, rng);
        let (gn, pn) = split(&self.neg, rng);
        (Sample { pos: gp, neg: gn }, Sample { pos: pp, neg: pn })
    }
}

fn log2_ratio(p: usize, n: usize) -> f64 {
    (p as f64 / (p + n) as f64).log2()
}

/// Rule value on a prune set; `None` when the rule covers nothing there.
fn prune_value(p: usize, n: usize) -> Option<f64> {
    (p + n > 0).then(|| (p as f64 - n as f64) / (p + n) as f64)
}

struct Learner<'a> {
    data: &'a TraceDataset,
    min_coverage: usize,
}

impl Learner<'_> {
    /// Best single condition by FOIL gain over the covered grow rows.
    fn best_condition(&self, pos: &[usize], neg: &[usize], min_pos: usize) -> Option<Condition> {
        let (p0, n0) = (pos.len(), neg.len());
        let base = log2_ratio(p0, n0);
        let mut rows: Vec<(usize, bool)> = pos
            .iter()
            .map(|&r| (r, true))
            .chain(neg.iter().map(|&r| (r, false)))
            .collect();
        let mut best: Option<(f64, Condition)> = None;
        let mut consider = |gain: f64, cond: Condition| {
            if gain > GAIN_EPS && best.as_ref().is_none_or(|(g, _)| gain > g + GAIN_EPS) {
                best = Some((gain, cond));
            }
        };
        for f in 0..self.data.n_features() {
            rows.sort_by(|a, b| self.data.value(a.0, f).total_cmp(&self.data.value(b.0, f)));
            let (mut lp, mut ln) = (0usize, 0usize);
            for i in 0..rows.len().saturating_sub(1) {
                if rows[i].1 {
                    lp += 1;
                } else {
                    ln += 1;
                }
                let lo = self.data.value(rows[i].0, f);
                let hi = self.data.value(rows[i + 1].0, f);
                if lo == hi {
                    continue;
                }
                let threshold = lo + (hi - lo) / 2.0;
                let (rp, rn) = (p0 - lp, n0 - ln);
                if lp >= min_pos && lp > 0 {
                    let gain = lp as f64 * (log2_ratio(lp, ln) - base);
                    consider(gain, Condition { feature: f, op: Op::Le, threshold });
                }
                if rp >= min_pos && rp > 0 {
                    let gain = rp as f64 * (log2_ratio(rp, rn) - base);
                    consider(gain, Condition { feature: f, op: Op::Gt, threshold });
                }
            }
        }
        best.map(|(_, c)| c)
    }

    /// Extends `conds` until no grow negatives are covered or nothing helps.
    fn grow(&self, grow: &Sample, mut conds: Vec<Condition>) -> Vec<Condition> {
        let mut pos: Vec<usize> = grow.pos.iter().copied().filter(|&r| covers(&conds, self.data, r)).collect();
        let mut neg: Vec<usize> = grow.neg.iter().copied().filter(|&r| covers(&conds, self.data, r)).collect();
        let min_pos = self.min_coverage.min(pos.len()).max(1);
        while !neg.is_empty() && !pos.is_empty() {
            let Some(cond) = self.best_condition(&pos, &neg, min_pos) else {
                break;
            };
            let row = |r: &usize| cond.matches(self.data.row(*r));
            pos.retain(row);
            neg.retain(row);
            conds.push(cond);
        }
        conds
    }

    /// Keeps the prefix maximizing `(p - n) / (p + n)` on the prune set,
    /// shorter prefixes winning ties.
    fn prune(&self, prune: &Sample, conds: Vec<Condition>) -> Vec<Condition> {
        if conds.len() <= 1 || prune.pos.is_empty() && prune.neg.is_empty() {
            return conds;
        }
        let mut best_len = conds.len();
        let mut best_val = f64::NEG_INFINITY;
        for len in 1..=conds.len() {
            let (p, n) = prune.coverage(&conds[..len], self.data);
            if let Some(v) = prune_value(p, n) {
                if v > best_val + GAIN_EPS {
                    best_val = v;
                    best_len = len;
                }
            }
        }
        let mut conds = conds;
        conds.truncate(best_len);
        conds
    }

    /// Whether a pruned rule is good enough to keep.
    fn acceptable(&self, conds: &[Condition], grow: &Sample, prune: &Sample) -> bool {
        if conds.is_empty() {
            return false;
        }
        let (p, n) = prune.coverage(conds, self.data);
        if p + n > 0 {
            return n * 2 <= p + n;
        }
        if !prune.pos.is_empty() {
            return false;
        }
        // Too few positives to hold any out; judge on the grow rows.
        let (p, n) = grow.coverage(conds, self.data);
        p > 0 && n * 2 <= p + n
    }

    fn prune_score(&self, conds: &[Condition], prune: &Sample) -> f64 {
        let (p, n) = prune.coverage(conds, self.data);
        prune_value(p, n).unwrap_or(f64::NEG_INFINITY)
    }

    /// Adds rules for `target` until its rows are covered or a rule fails.
    fn cover(
        &self,
        rows: &mut Vec<usize>,
        y: &[usize],
        target: usize,
        rules: &mut Vec<Vec<Condition>>,
        rng: &mut ChaCha8Rng,
    ) {
        loop {
            let sample = Sample::of(rows, y, target);
            if sample.pos.is_empty() {
                return;
            }
            let (grow, prune) = sample.grow_prune(rng);
            if grow.pos.is_empty() {
                return;
            }
            let conds = self.prune(&prune, self.grow(&grow, Vec::new()));
            if !self.acceptable(&conds, &grow, &prune) {
                return;
            }
            rows.retain(|&r| !covers(&conds, self.data, r));
            rules.push(conds);
        }
    }

    fn optimize(
        &self,
        start: &[usize],
        y: &[usize],
        target: usize,
        rules: &mut [Vec<Condition>],
        rng: &mut ChaCha8Rng,
    ) {
        let mut rows = start.to_vec();
        for rule in rules.iter_mut() {
            let sample = Sample::of(&rows, y, target);
            let (grow, prune) = sample.grow_prune(rng);
            if !grow.pos.is_empty() {
                let replacement = self.prune(&prune, self.grow(&grow, Vec::new()));
                let revision = self.prune(&prune, self.grow(&grow, rule.clone()));
                let mut best = self.prune_score(rule, &prune);
                for cand in [replacement, revision] {
                    if cand.is_empty() || !self.acceptable(&cand, &grow, &prune) {
                        continue;
                    }
                    let v = self.prune_score(&cand, &prune);
                    if v > best + GAIN_EPS {
                        best = v;
                        *rule = cand;
                    }
                }
            }
            rows.retain(|&r| !covers(rule, self.data, r));
        }
    }
}

pub fn train_jrip(data: &TraceDataset, params: &JRipParams, seed: u64) -> Result<TrainedModel> {
    let (classes, y) = encode_labels(data);
    if classes.len() < 2 {
        return Err(Error::InvalidDataset("rule learning needs at least 2 classes".into()));
    }
    let k = classes.len();
    let mut prevalence = vec![0usize; k];
    for &c in &y {
        prevalence[c] += 1;
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&c| (prevalence[c], c));
    let default = *order.last().unwrap();

    let learner = Learner {
        data,
        min_coverage: params.min_coverage.max(1),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining: Vec<usize> = (0..data.n_rows()).collect();
    let mut rule_list: Vec<(Vec<Condition>, usize)> = Vec::new();

    for &target in &order[..k - 1] {
        let start = remaining.clone();
        let mut rules = Vec::new();
        let mut rows = start.clone();
        learner.cover(&mut rows, &y, target, &mut rules, &mut rng);
        for _ in 0..params.optimization_passes {
            if rules.is_empty() {
                break;
            }
            learner.optimize(&start, &y, target, &mut rules, &mut rng);
            rows = start.clone();
            for r in &rules {
                rows.retain(|&i| !covers(r, data, i));
            }
            learner.cover(&mut rows, &y, target, &mut rules, &mut rng);
        }
        remaining = rows;
        rule_list.extend(rules.into_iter().map(|r| (r, target)));
    }

    let mut rules: Vec<Rule> = rule_list
        .into_iter()
        .map(|(conditions, c)| Rule {
            conditions,
            class: classes[c],
            coverage: vec![0; k],
        })
        .collect();
    let mut default_coverage = vec![0; k];
    for (i, row) in data.rows().enumerate() {
        match rules.iter_mut().find(|r| r.matches(row)) {
            Some(r) => r.coverage[y[i]] += 1,
            None => default_coverage[y[i]] += 1,
        }
    }

    Ok(TrainedModel {
        class_list: classes.clone(),
        feature_names: data.feature_names().to_vec(),
        payload: ModelPayload::RuleList(RuleListPayload {
            rules,
            default_class: classes[default],
            default_coverage,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassLabel::*;

    fn payload(m: &TrainedModel) -> &RuleListPayload {
        match &m.payload {
            ModelPayload::RuleList(p) => p,
            _ => unreachable!(),
        }
    }

    #[test]
    fn separable_one_feature() {
        // 8 benign below 10, 16 malware above 20.
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..8 {
            rows.push(vec![i as f64]);
            labels.push(Benign);
        }
        for i in 0..16 {
            rows.push(vec![20.0 + i as f64]);
            labels.push(Malware);
        }
        let d = TraceDataset::new(vec!["f".into()], rows, labels).unwrap();
        let m = train_jrip(&d, &JRipParams::default(), 7).unwrap();
        let p = payload(&m);
        assert_eq!(p.default_class, Malware);
        assert_eq!(p.rules.len(), 1);
        let rule = &p.rules[0];
        assert_eq!(rule.class, Benign);
        assert_eq!(rule.conditions.len(), 1);
        assert_eq!(rule.conditions[0].op, Op::Le);
        assert!(rule.conditions[0].threshold > 7.0 && rule.conditions[0].threshold < 20.0);
        assert_eq!(m.accuracy(&d).unwrap(), 1.0);
    }

    #[test]
    fn single_class_is_an_error() {
        let d = TraceDataset::new(vec!["f".into()], vec![vec![1.0], vec![2.0]], vec![Worm, Worm]).unwrap();
        assert!(train_jrip(&d, &JRipParams::default(), 0).is_err());
    }

    #[test]
    fn coverage_partitions_training_rows() {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![(i * 7 % 13) as f64, (i % 5) as f64]).collect();
        let labels = (0..60)
            .map(|i| match i % 3 {
                0 => Benign,
                1 => Worm,
                _ => Virus,
            })
            .collect();
        let d = TraceDataset::new(vec!["a".into(), "b".into()], rows, labels).unwrap();
        let m = train_jrip(&d, &JRipParams::default(), 3).unwrap();
        let p = payload(&m);
        let total: usize = p.rules.iter().flat_map(|r| r.coverage.iter()).sum::<usize>()
            + p.default_coverage.iter().sum::<usize>();
        assert_eq!(total, d.n_rows());
    }
}
