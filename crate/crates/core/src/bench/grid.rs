use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::BenchConfig;
use crate::dataset::{TaskMode, TraceDataset};
use crate::error::{Error, Result};
use crate::feature_rank::{rank_features, select_top_k, DiscretizationScheme, FeatureRanking};
use crate::label::ClassLabel;
use crate::learners::{train, LearnerKind};
use crate::metrics::{evaluate, multiclass_roc, ConfusionMatrix, RocSeries};
use crate::split::{stratified_split, SplitPair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub accuracy: f64,
    pub weighted_auc: f64,
    pub per_class_auc: BTreeMap<ClassLabel, f64>,
    pub selected_features: Vec<String>,
    pub confusion: ConfusionMatrix,
    pub roc: BTreeMap<ClassLabel, RocSeries>,
    /// Model classes with no test rows, hence no curve.
    pub omitted_classes: Vec<ClassLabel>,
    pub wall_time_ms: Option<f64>,
}

impl CellMetrics {
    /// Headline AUC: the malware curve in binary mode, the
    /// prevalence-weighted one-vs-rest mean otherwise.
    pub fn auc(&self, mode: TaskMode) -> f64 {
        match mode {
            TaskMode::Binary => self
                .per_class_auc
                .get(&ClassLabel::Malware)
                .copied()
                .unwrap_or(self.weighted_auc),
            TaskMode::Multiclass => self.weighted_auc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellOutcome {
    Ok(CellMetrics),
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub learner: LearnerKind,
    pub k: usize,
    pub mode: TaskMode,
    pub outcome: CellOutcome,
}

impl CellResult {
    pub fn metrics(&self) -> Option<&CellMetrics> {
        match &self.outcome {
            CellOutcome::Ok(m) => Some(m),
            CellOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub config: BenchConfig,
    pub train_rows: usize,
    pub test_rows: usize,
    /// Train-only ranking per mode; absent when ranking itself failed.
    pub rankings: BTreeMap<TaskMode, FeatureRanking>,
    /// Ordered by (learner, k, mode) in config order.
    pub cells: Vec<CellResult>,
}

impl ExperimentGrid {
    pub fn cell(&self, learner: LearnerKind, k: usize, mode: TaskMode) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.learner == learner && c.k == k && c.mode == mode)
    }

    pub fn metrics(&self, learner: LearnerKind, k: usize, mode: TaskMode) -> Option<&CellMetrics> {
        self.cell(learner, k, mode).and_then(CellResult::metrics)
    }

    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.metrics().is_none()).count()
    }

    pub fn exit_code(&self) -> i32 {
        if self.failed_cells() == 0 {
            super::exit::SUCCESS
        } else {
            super::exit::PARTIAL_FAILURE
        }
    }
}

/// Loads or synthesizes the data, splits it once and runs every cell.
pub fn run_grid(config: &BenchConfig) -> Result<ExperimentGrid> {
    config.validate()?;
    let data = config.load_data()?;
    if data.task_mode() == TaskMode::Binary && config.task_modes.contains(&TaskMode::Multiclass) {
        return Err(Error::Config(
            "multiclass mode requested but the data only has binary labels".into(),
        ));
    }
    let split = stratified_split(&data, config.train_fraction, config.seed)?;
    run_grid_on_split(config, &split)
}

fn view(data: &TraceDataset, mode: TaskMode) -> TraceDataset {
    match mode {
        TaskMode::Binary => data.to_binary_view(),
        TaskMode::Multiclass => data.clone(),
    }
}

/// Runs every cell on a prepared split. Test labels are never read before
/// evaluation.
pub fn run_grid_on_split(config: &BenchConfig, split: &SplitPair) -> Result<ExperimentGrid> {
    config.validate()?;
    let mut views = BTreeMap::new();
    let mut rankings = BTreeMap::new();
    let mut ranking_errors = BTreeMap::new();
    for &mode in &config.task_modes {
        let train_view = view(&split.train, mode);
        let test_view = view(&split.test, mode);
        let ranked = DiscretizationScheme::equal_frequency(&train_view, config.rank_bins)
            .and_then(|scheme| rank_features(&train_view, &scheme));
        match ranked {
            Ok(r) => {
                rankings.insert(mode, r);
            }
            Err(e) => {
                ranking_errors.insert(mode, e.to_string());
            }
        }
        views.insert(mode, (train_view, test_view));
    }

    let mut keys = Vec::new();
    for &learner in &config.learners {
        for &k in &config.feature_counts {
            for &mode in &config.task_modes {
                keys.push((learner, k, mode));
            }
        }
    }
    let cells = keys
        .into_par_iter()
        .map(|(learner, k, mode)| {
            let outcome = match rankings.get(&mode) {
                Some(ranking) => {
                    let (train_view, test_view) = &views[&mode];
                    match run_cell(config, learner, k, ranking, train_view, test_view) {
                        Ok(m) => CellOutcome::Ok(m),
                        Err(e) => CellOutcome::Failed { error: e.to_string() },
                    }
                }
                None => CellOutcome::Failed {
                    error: format!("feature ranking failed: {}", ranking_errors[&mode]),
                },
            };
            CellResult {
                learner,
                k,
                mode,
                outcome,
            }
        })
        .collect();

    Ok(ExperimentGrid {
        config: config.clone(),
        train_rows: split.train.n_rows(),
        test_rows: split.test.n_rows(),
        rankings,
        cells,
    })
}

fn run_cell(
    config: &BenchConfig,
    learner: LearnerKind,
    k: usize,
    ranking: &FeatureRanking,
    train_view: &TraceDataset,
    test_view: &TraceDataset,
) -> Result<CellMetrics> {
    let start = Instant::now();
    let train_k = select_top_k(train_view, ranking, k)?;
    let test_k = select_top_k(test_view, ranking, k)?;
    let model = train(learner, &config.hyperparameters, &train_k, config.seed)?;
    let confusion = evaluate(&model, &test_k)?;
    let roc = multiclass_roc(&model, &test_k)?;
    let elapsed = start.elapsed().as_secs_f64() * 1000.0;
    Ok(CellMetrics {
        accuracy: confusion.accuracy(),
        weighted_auc: roc.weighted_auc,
        per_class_auc: roc.per_class.iter().map(|(c, s)| (*c, s.auc)).collect(),
        selected_features: train_k.feature_names().to_vec(),
        confusion,
        roc: roc.per_class,
        omitted_classes: roc.omitted,
        wall_time_ms: config.record_timings.then_some(elapsed),
    })
}
