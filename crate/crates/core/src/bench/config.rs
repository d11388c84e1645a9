use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{TaskMode, TraceDataset};
use crate::error::{Error, Result};
use crate::feature_rank::DEFAULT_BIN_COUNT;
use crate::io::{self, DEFAULT_LABEL_COLUMN};
use crate::learners::{Hyperparameters, LearnerKind};
use crate::synth::{self, GeneratorSpec};

/// Where grid data comes from. With `path` unset the bundled synthetic
/// profiles are sampled, optionally overridden field by field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSource {
    pub path: Option<PathBuf>,
    pub label_column: String,
    /// Generator spec file replacing the bundled profiles.
    pub profiles: Option<PathBuf>,
    pub n_per_class: Option<usize>,
    pub separability: Option<f64>,
    /// Sampling seed; the grid seed when unset.
    pub seed: Option<u64>,
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource {
            path: None,
            label_column: DEFAULT_LABEL_COLUMN.to_string(),
            profiles: None,
            n_per_class: None,
            separability: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub seed: u64,
    pub train_fraction: f64,
    /// Column order of the report tables.
    pub feature_counts: Vec<usize>,
    pub task_modes: Vec<TaskMode>,
    pub learners: Vec<LearnerKind>,
    pub rank_bins: usize,
    /// Wall-clock times make reports non-reproducible, so they are opt-in.
    pub record_timings: bool,
    pub data: DataSource,
    pub hyperparameters: Hyperparameters,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            seed: 2020,
            train_fraction: 0.7,
            feature_counts: vec![16, 8, 4, 2],
            task_modes: vec![TaskMode::Binary, TaskMode::Multiclass],
            learners: LearnerKind::ALL.to_vec(),
            rank_bins: DEFAULT_BIN_COUNT,
            record_timings: false,
            data: DataSource::default(),
            hyperparameters: Hyperparameters::default(),
        }
    }
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: BenchConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; relative data paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.data.path, &mut config.data.profiles].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("bench config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return fail("train_fraction must lie strictly between 0 and 1");
        }
        if self.feature_counts.is_empty() || self.feature_counts.contains(&0) {
            return fail("feature_counts must be a non-empty list of positive integers");
        }
        if has_duplicates(&self.feature_counts) {
            return fail("feature_counts contains duplicates");
        }
        if self.task_modes.is_empty() || has_duplicates(&self.task_modes) {
            return fail("task_modes must be non-empty and distinct");
        }
        if self.learners.is_empty() || has_duplicates(&self.learners) {
            return fail("learners must be non-empty and distinct");
        }
        if self.rank_bins == 0 {
            return fail("rank_bins must be positive");
        }
        if self.data.path.is_some()
            && (self.data.profiles.is_some()
                || self.data.n_per_class.is_some()
                || self.data.separability.is_some()
                || self.data.seed.is_some())
        {
            return fail("data.path cannot be combined with synthetic settings");
        }
        Ok(())
    }

    /// The generator spec for synthetic sources, `None` for file sources.
    pub fn generator_spec(&self) -> Result<Option<GeneratorSpec>> {
        if self.data.path.is_some() {
            return Ok(None);
        }
        let mut spec = match &self.data.profiles {
            Some(p) => GeneratorSpec::load(p)?,
            None => GeneratorSpec::default(),
        };
        if let Some(n) = self.data.n_per_class {
            spec.n_per_class = n;
        }
        if let Some(s) = self.data.separability {
            spec.separability = s;
        }
        spec.seed = self.data.seed.unwrap_or(self.seed);
        spec.validate()?;
        Ok(Some(spec))
    }

    pub fn load_data(&self) -> Result<TraceDataset> {
        match (&self.data.path, self.generator_spec()?) {
            (Some(path), _) => {
                if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("arff")) {
                    io::load_arff(path)
                } else {
                    io::load_csv(path, &self.data.label_column)
                }
            }
            (None, Some(spec)) => synth::generate(&spec),
            (None, None) => unreachable!("synthetic source always yields a spec"),
        }
    }
}

fn has_duplicates<T: PartialEq>(items: &[T]) -> bool {
    items.iter().enumerate().any(|(i, a)| items[..i].contains(a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default_grid() {
        let c = BenchConfig::from_toml("").unwrap();
        assert_eq!(c, BenchConfig::default());
        assert_eq!(c.learners.len() * c.feature_counts.len() * c.task_modes.len(), 40);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = BenchConfig::default();
        c.data.separability = Some(0.7);
        c.hyperparameters.j48.min_leaf = 5;
        assert_eq!(BenchConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "train_fraction = 1.0",
            "feature_counts = []",
            "feature_counts = [4, 4]",
            "task_modes = [\"tri\"]",
            "learners = [\"svm\"]",
            "bogus = 1",
            "[data]\npath = \"x.csv\"\nseparability = 0.5",
        ] {
            assert!(matches!(BenchConfig::from_toml(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn synthetic_overrides_apply() {
        let c = BenchConfig::from_toml("seed = 7\n[data]\nn_per_class = 20\nseparability = 0.5\n").unwrap();
        let spec = c.generator_spec().unwrap().unwrap();
        assert_eq!((spec.n_per_class, spec.separability, spec.seed), (20, 0.5, 7));
    }
}
