//! Seeded synthetic HPC traces for benign software and five malware kinds.
//!
//! Each feature is an independent normal truncated at zero. A class's mean
//! and scale are blended between the cross-class centroid and its profile:
//! `centroid + separability * (profile - centroid)`.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{TaskMode, TraceDataset};
use crate::error::{Error, Result};
use crate::label::ClassLabel;

pub const DEFAULT_PROFILES_TOML: &str = include_str!("../configs/synth_default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassProfile {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub n_per_class: usize,
    pub separability: f64,
    pub seed: u64,
    /// The first two names are the designated high-gap counters.
    pub feature_names: Vec<String>,
    pub profiles: BTreeMap<ClassLabel, ClassProfile>,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self::from_toml(DEFAULT_PROFILES_TOML).expect("bundled synth profile is valid")
    }
}

impl GeneratorSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: GeneratorSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("generator spec serializes")
    }

    pub fn with_separability(mut self, separability: f64) -> Self {
        self.separability = separability;
        self
    }

    pub fn with_n_per_class(mut self, n: usize) -> Self {
        self.n_per_class = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_per_class < 2 {
            return bad(format!("n_per_class = {} must be at least 2", self.n_per_class));
        }
        if !(0.0..=1.0).contains(&self.separability) {
            return bad(format!("separability {} outside [0, 1]", self.separability));
        }
        let width = self.feature_names.len();
        if width < 2 {
            return bad("at least two feature names are required".into());
        }
        for (i, n) in self.feature_names.iter().enumerate() {
            if n.is_empty() || !n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return bad(format!("invalid feature name {n:?}"));
            }
            if self.feature_names[..i].contains(n) {
                return bad(format!("duplicate feature name {n:?}"));
            }
        }
        for label in ClassLabel::MULTICLASS {
            let Some(p) = self.profiles.get(&label) else {
                return bad(format!("missing profile for {label}"));
            };
            if p.mean.len() != width || p.scale.len() != width {
                return bad(format!("profile {label} must have {width} means and scales"));
            }
            if p.mean.iter().any(|m| !m.is_finite() || *m < 0.0) {
                return bad(format!("profile {label} has a negative or non-finite mean"));
            }
            if p.scale.iter().any(|s| !s.is_finite() || *s <= 0.0) {
                return bad(format!("profile {label} has a non-positive scale"));
            }
        }
        if self.profiles.contains_key(&ClassLabel::Malware) {
            return bad("profiles are per malware kind, not for the malware super-label".into());
        }
        Ok(())
    }

    /// Per-class (mean, scale) after blending toward the centroid.
    pub fn blended_profiles(&self) -> BTreeMap<ClassLabel, ClassProfile> {
        let width = self.feature_names.len();
        let k = ClassLabel::MULTICLASS.len() as f64;
        let centroid = |get: fn(&ClassProfile) -> &Vec<f64>| -> Vec<f64> {
            (0..width)
                .map(|f| ClassLabel::MULTICLASS.iter().map(|l| get(&self.profiles[l])[f]).sum::<f64>() / k)
                .collect()
        };
        let mean_c = centroid(|p| &p.mean);
        let scale_c = centroid(|p| &p.scale);
        let s = self.separability;
        ClassLabel::MULTICLASS
            .iter()
            .map(|&l| {
                let p = &self.profiles[&l];
                let blend = |c: &[f64], v: &[f64]| -> Vec<f64> {
                    c.iter().zip(v).map(|(c, v)| c + s * (v - c)).collect()
                };
                (
                    l,
                    ClassProfile {
                        mean: blend(&mean_c, &p.mean),
                        scale: blend(&scale_c, &p.scale),
                    },
                )
            })
            .collect()
    }
}

fn sample_nonnegative(normal: &Normal<f64>, rng: &mut ChaCha8Rng) -> f64 {
    // Means are >= 0, so each draw is accepted with probability >= 1/2.
    loop {
        let v = normal.sample(rng);
        if v >= 0.0 {
            return v;
        }
    }
}

/// Draws `6 * n_per_class` rows, grouped by class in canonical order.
pub fn generate(spec: &GeneratorSpec) -> Result<TraceDataset> {
    spec.validate()?;
    let profiles = spec.blended_profiles();
    let width = spec.feature_names.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let total = spec.n_per_class * ClassLabel::MULTICLASS.len();
    let mut values = Vec::with_capacity(total * width);
    let mut labels = Vec::with_capacity(total);
    for label in ClassLabel::MULTICLASS {
        let p = &profiles[&label];
        let dists = p
            .mean
            .iter()
            .zip(&p.scale)
            .map(|(&m, &s)| Normal::new(m, s).map_err(|e| Error::Config(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        for _ in 0..spec.n_per_class {
            for d in &dists {
                values.push(sample_nonnegative(d, &mut rng));
            }
            labels.push(label);
        }
    }
    TraceDataset::from_parts(spec.feature_names.clone(), values, labels, TaskMode::Multiclass)
}
