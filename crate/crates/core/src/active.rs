//! Certainty-sampling active learning simulation.
//!
//! A run reveals a random seed set, then repeatedly trains on everything
//! revealed so far and reveals the highest-scored hidden citations, until all
//! relevant citations are found.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::rng;
use crate::svm::{self, Loss, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ALConfig {
    pub seed_relevant: usize,
    pub seed_irrelevant: usize,
    pub batch_size: usize,
    pub repeats: usize,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for ALConfig {
    fn default() -> Self {
        ALConfig {
            seed_relevant: 5,
            seed_irrelevant: 45,
            batch_size: 50,
            repeats: 500,
            train: TrainConfig::new(Loss::Auc, true),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ALStep {
    pub iteration: usize,
    pub screened: usize,
    pub found: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ALTrace {
    pub steps: Vec<ALStep>,
    pub total: usize,
    pub relevant_total: usize,
    /// Citations revealed when the last relevant one was found, over the corpus size.
    pub screened_fraction: f64,
    /// Indices in the order they were revealed.
    pub revealed: Vec<usize>,
}

impl ALTrace {
    /// `(screened, relevant still hidden)` after each iteration.
    pub fn inclusion_curve(&self) -> Vec<(usize, usize)> {
        self.steps
            .iter()
            .map(|s| (s.screened, self.relevant_total - s.found))
            .collect()
    }
}

/// The `batch` highest-scored hidden indices, best first; ties go to the lower index.
pub fn select_batch(scores: &[f64], revealed: &[bool], batch: usize) -> Vec<usize> {
    let mut hidden: Vec<usize> = (0..scores.len()).filter(|&i| !revealed[i]).collect();
    hidden.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    hidden.truncate(batch);
    hidden
}

pub fn simulate_run(
    features: &FeatureMatrix,
    labels: &[Label],
    config: &ALConfig,
    run_seed: u64,
) -> Result<ALTrace> {
    let n = labels.len();
    if features.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: features.n(),
        });
    }
    if config.batch_size == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    let relevant: Vec<usize> = (0..n).filter(|&i| labels[i].is_relevant()).collect();
    let irrelevant: Vec<usize> = (0..n).filter(|&i| !labels[i].is_relevant()).collect();
    if config.seed_relevant > relevant.len() || config.seed_irrelevant > irrelevant.len() {
        return Err(Error::invalid(format!(
            "seed of {}+{} exceeds class counts {}+{}",
            config.seed_relevant,
            config.seed_irrelevant,
            relevant.len(),
            irrelevant.len()
        )));
    }
    if config.seed_relevant == 0 || config.seed_irrelevant == 0 {
        return Err(Error::invalid("the seed set needs both classes"));
    }
    let mut r = rng::seeded(run_seed);
    let mut revealed: Vec<usize> = relevant
        .choose_multiple(&mut r, config.seed_relevant)
        .chain(irrelevant.choose_multiple(&mut r, config.seed_irrelevant))
        .copied()
        .collect();
    let mut is_revealed = vec![false; n];
    for &i in &revealed {
        is_revealed[i] = true;
    }
    let count_found = |rev: &[usize]| rev.iter().filter(|&&i| labels[i].is_relevant()).count();
    let mut found = count_found(&revealed);
    let mut steps = vec![ALStep {
        iteration: 0,
        screened: revealed.len(),
        found,
    }];
    while found < relevant.len() {
        let x = features.select(&revealed);
        let y: Vec<Label> = revealed.iter().map(|&i| labels[i]).collect();
        let model = svm::train(&x, &y, None, &config.train)?;
        let scores: Vec<f64> = (0..n).map(|i| model.score(features, i)).collect();
        for i in select_batch(&scores, &is_revealed, config.batch_size) {
            is_revealed[i] = true;
            revealed.push(i);
            if labels[i].is_relevant() {
                found += 1;
            }
        }
        steps.push(ALStep {
            iteration: steps.len(),
            screened: revealed.len(),
            found,
        });
    }
    let screened = steps.last().expect("at least the seed step").screened;
    Ok(ALTrace {
        steps,
        total: n,
        relevant_total: relevant.len(),
        screened_fraction: screened as f64 / n as f64,
        revealed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ALSummary {
    pub fractions: Vec<f64>,
    pub mean_fraction: f64,
    pub traces: Vec<ALTrace>,
}

/// `config.repeats` independent runs; run `i` uses `derive_seed(config.seed, i)`.
pub fn simulate(features: &FeatureMatrix, labels: &[Label], config: &ALConfig) -> Result<ALSummary> {
    let traces: Vec<ALTrace> = (0..config.repeats)
        .into_par_iter()
        .map(|i| simulate_run(features, labels, config, rng::derive_seed(config.seed, i as u64)))
        .collect::<Result<_>>()?;
    let fractions: Vec<f64> = traces.iter().map(|t| t.screened_fraction).collect();
    let mean_fraction = if fractions.is_empty() {
        0.0
    } else {
        fractions.iter().sum::<f64>() / fractions.len() as f64
    };
    Ok(ALSummary {
        fractions,
        mean_fraction,
        traces,
    })
}

/// Counts per `1/bins`-wide bin; a fraction of exactly 1 lands in the top bin.
pub fn screened_histogram(fractions: &[f64], bins: usize) -> Result<Vec<usize>> {
    let mut counts = vec![0; bins];
    for &f in fractions {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::invalid(format!("screened fraction {f} outside (0, 1]")));
        }
        let b = ((f * bins as f64).floor() as usize).min(bins - 1);
        counts[b] += 1;
    }
    Ok(counts)
}
