use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use screenkit::features::SkipGramConfig;
use screenkit::relrank::EnsembleConfig;
use screenkit::svm::TrainConfig;

/// Optional TOML file passed with `--config`; command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub svm: SvmSection,
    pub embedding: EmbeddingSection,
    pub ensemble: EnsembleSection,
    pub active: ActiveSection,
    pub stats: StatsSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmSection {
    pub c: Option<f64>,
    pub j: Option<f64>,
    pub epsilon: Option<f64>,
    pub max_iters: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSection {
    pub dim: Option<usize>,
    pub window: Option<usize>,
    pub min_count: Option<usize>,
    pub epochs: Option<usize>,
    pub negative: Option<usize>,
    pub sample: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub separation_threshold: Option<f64>,
    pub max_range: Option<f64>,
    pub star_cutoffs: Option<[f64; 3]>,
    pub member_thresholds: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActiveSection {
    pub seed_relevant: Option<usize>,
    pub seed_irrelevant: Option<usize>,
    pub batch_size: Option<usize>,
    pub repeats: Option<usize>,
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsSection {
    pub alpha: Option<f64>,
    pub reps: Option<usize>,
    pub folds: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<FileConfig> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn apply_svm(&self, mut cfg: TrainConfig) -> TrainConfig {
        if let Some(c) = self.svm.c {
            cfg = cfg.with_c(c);
        }
        if let Some(j) = self.svm.j {
            cfg = cfg.with_j(j);
        }
        if let Some(e) = self.svm.epsilon {
            cfg = cfg.with_epsilon(e);
        }
        if let Some(m) = self.svm.max_iters {
            cfg = cfg.with_max_iters(m);
        }
        cfg
    }

    pub fn skipgram(&self, dim: Option<usize>, seed: u64) -> SkipGramConfig {
        let d = SkipGramConfig::default();
        let e = &self.embedding;
        SkipGramConfig {
            dim: dim.or(e.dim).unwrap_or(d.dim),
            window: e.window.unwrap_or(d.window),
            min_count: e.min_count.unwrap_or(d.min_count),
            epochs: e.epochs.unwrap_or(d.epochs),
            negative: e.negative.unwrap_or(d.negative),
            sample: e.sample.unwrap_or(d.sample),
            seed,
            ..d
        }
    }

    pub fn ensemble(&self) -> EnsembleConfig {
        let mut cfg = EnsembleConfig::default();
        let e = &self.ensemble;
        if let Some(v) = e.separation_threshold {
            cfg.separation_threshold = v;
        }
        if let Some(v) = e.max_range {
            cfg.max_range = v;
        }
        if let Some(v) = e.star_cutoffs {
            cfg.star_cutoffs = v;
        }
        if let Some(v) = &e.member_thresholds {
            cfg.member_thresholds = v.clone();
        }
        cfg
    }
}
