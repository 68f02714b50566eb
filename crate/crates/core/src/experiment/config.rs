use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::SplitMode;
use crate::error::{Error, Result};
use crate::features::FeatureKind;
use crate::models::ArchitectureKind;
use crate::train_eval::TrainConfig;

/// Where recordings come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum CorpusSource {
    /// An existing `<Genre>/*.wav` tree, with or without `manifest.csv`.
    Directory { path: PathBuf },
    /// Generated into `path` unless a manifest is already there.
    Synthetic { path: PathBuf, clips_per_class: usize, seed: u64 },
}

impl CorpusSource {
    pub fn root(&self) -> &Path {
        match self {
            CorpusSource::Directory { path } | CorpusSource::Synthetic { path, .. } => path,
        }
    }
}

/// One experiment, or a grid of them.
///
/// Feature and architecture names are kept as written and resolved when the
/// run starts, so a typo surfaces as a failure of the matching stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub corpus: CorpusSource,
    pub features: Vec<String>,
    pub architectures: Vec<String>,
    /// The `seed` field is replaced by each cell's own seed.
    pub train: TrainConfig,
    pub split_mode: SplitMode,
    pub train_ratio: f64,
    pub output_dir: PathBuf,
    /// Defaults to `<output_dir>/cache`.
    pub cache_dir: Option<PathBuf>,
    pub seed: u64,
    /// Cells trained concurrently; 1 runs them in order.
    pub jobs: usize,
}

impl ExperimentConfig {
    /// Every feature and architecture, the standard training schedule, 80/20
    /// track-level split.
    pub fn grid(corpus: CorpusSource, output_dir: impl Into<PathBuf>, seed: u64) -> Self {
        ExperimentConfig {
            corpus,
            features: FeatureKind::ALL.iter().map(|k| k.id().to_string()).collect(),
            architectures: ArchitectureKind::ALL.iter().map(|a| a.id().to_string()).collect(),
            train: TrainConfig::with_seed(seed),
            split_mode: SplitMode::TrackLevel,
            train_ratio: 0.8,
            output_dir: output_dir.into(),
            cache_dir: None,
            seed,
            jobs: 1,
        }
    }

    /// A one-cell configuration.
    pub fn single(
        corpus: CorpusSource,
        feature: FeatureKind,
        architecture: ArchitectureKind,
        output_dir: impl Into<PathBuf>,
        seed: u64,
    ) -> Self {
        ExperimentConfig {
            features: vec![feature.id().to_string()],
            architectures: vec![architecture.id().to_string()],
            ..Self::grid(corpus, output_dir, seed)
        }
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.output_dir.join("cache"))
    }

    pub fn feature_kinds(&self) -> Result<Vec<FeatureKind>> {
        if self.features.is_empty() {
            return Err(Error::Config("no feature kinds selected".into()));
        }
        let mut kinds: Vec<FeatureKind> = self.features.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        kinds.sort_by_key(|k| feature_index(*k));
        kinds.dedup();
        Ok(kinds)
    }

    pub fn architecture_kinds(&self) -> Result<Vec<ArchitectureKind>> {
        if self.architectures.is_empty() {
            return Err(Error::Config("no architectures selected".into()));
        }
        let mut kinds: Vec<ArchitectureKind> = self.architectures.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        kinds.sort_by_key(|a| architecture_index(*a));
        kinds.dedup();
        Ok(kinds)
    }

    /// Checks everything that does not need the corpus.
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return Err(Error::Config(format!("train ratio {} outside (0, 1)", self.train_ratio)));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        if let CorpusSource::Synthetic { clips_per_class: 0, .. } = self.corpus {
            return Err(Error::Config("synthetic corpus needs at least one clip per class".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("experiment config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Position in the canonical feature order.
pub fn feature_index(kind: FeatureKind) -> usize {
    FeatureKind::ALL.iter().position(|&k| k == kind).expect("listed kind")
}

/// Position in the canonical architecture order.
pub fn architecture_index(kind: ArchitectureKind) -> usize {
    ArchitectureKind::ALL.iter().position(|&a| a == kind).expect("listed architecture")
}

/// Index of a cell in the full 6 x 5 grid, feature-major. It does not depend
/// on which subset of cells a run selects.
pub fn cell_index(feature: FeatureKind, architecture: ArchitectureKind) -> usize {
    feature_index(feature) * ArchitectureKind::ALL.len() + architecture_index(architecture)
}

/// `seed + cell index`, wrapping.
pub fn cell_seed(seed: u64, feature: FeatureKind, architecture: ArchitectureKind) -> u64 {
    seed.wrapping_add(cell_index(feature, architecture) as u64)
}
