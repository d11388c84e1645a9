//! Malware detection from hardware performance counter traces.
//!
//! Datasets are rows of non-negative counter readings labelled benign or
//! with a malware class. The crate covers loading and synthesizing such
//! data, information-gain feature ranking, five classifiers, evaluation
//! metrics and a benchmark grid over learners, feature counts and tasks.

pub mod bench;
pub mod dataset;
pub mod error;
pub mod feature_rank;
pub mod io;
pub mod label;
pub mod learners;
pub mod metrics;
pub mod split;
pub mod synth;

pub use dataset::{TaskMode, TraceDataset};
pub use error::{Error, Result};
pub use feature_rank::{rank_features, select_top_k, DiscretizationScheme, FeatureRanking};
pub use label::ClassLabel;
pub use learners::{train, Hyperparameters, LearnerKind, TrainedModel};
pub use metrics::{evaluate, multiclass_roc, roc_curve, ConfusionMatrix, RocSeries};
pub use split::{stratified_split, SplitPair};
pub use synth::{generate, GeneratorSpec};
