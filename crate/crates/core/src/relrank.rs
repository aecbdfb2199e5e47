//! Five-star relevance rating from an ensemble of three linear models.
//!
//! Each member ranks the unlabeled citations. The first member decides the
//! sign of the vote count; later members can only strengthen it. The combined
//! score is `finv·ST + ns`, where `finv` is the summed fractional rank votes
//! for positive vote counts and the (negative) vote count otherwise, and `ns`
//! is the mean rank mapped onto `[0, MR]`.

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label};
use crate::error::{Error, Result};
use crate::features::EmbeddingTable;
use crate::methods::{fit_and_score, FeatureContext, FeatureKind, Method};
use crate::svm::{Loss, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub members: Vec<(TrainConfig, FeatureKind)>,
    pub member_thresholds: Vec<f64>,
    pub separation_threshold: f64,
    pub max_range: f64,
    /// Lower bounds of the 3-, 4- and 5-star bands.
    pub star_cutoffs: [f64; 3],
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            members: vec![
                (TrainConfig::new(Loss::Auc, true), FeatureKind::W2vRow),
                (TrainConfig::new(Loss::CostHinge, true), FeatureKind::W2vRow),
                (TrainConfig::new(Loss::CostHinge, true), FeatureKind::UniBi),
            ],
            member_thresholds: vec![0.0; 3],
            separation_threshold: 1000.0,
            max_range: 800.0,
            star_cutoffs: [0.0, 2000.0, 2500.0],
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.members.is_empty() {
            return Err(Error::invalid("ensemble needs at least one member"));
        }
        if self.member_thresholds.len() != self.members.len() {
            return Err(Error::invalid("one threshold per ensemble member is required"));
        }
        if self.separation_threshold <= self.max_range {
            return Err(Error::invalid("separation threshold must exceed max range"));
        }
        let [s3, s4, s5] = self.star_cutoffs;
        if !(s3 < s4 && s4 < s5) {
            return Err(Error::invalid("star cutoffs must be increasing"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedScore {
    /// Position of the citation in the scored input.
    pub index: usize,
    pub id: String,
    pub score: f64,
    pub nv: i32,
    pub fv: f64,
    pub rs: f64,
    pub ns: f64,
}

/// Ranks 1..=U with the highest score at U; among equal scores the earlier index ranks higher.
pub fn rank_by_score(scores: &[f64]) -> Result<Vec<usize>> {
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::invalid(format!("non-finite score {bad}")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(b.cmp(&a)));
    let mut ranks = vec![0; scores.len()];
    for (r, &i) in order.iter().enumerate() {
        ranks[i] = r + 1;
    }
    Ok(ranks)
}

pub fn fvote(rank: usize, u: usize) -> f64 {
    let u = u as f64;
    (-(u - rank as f64) / u).exp()
}

pub fn norm_rank(mean_rank: f64, u: usize, max_range: f64) -> f64 {
    if u <= 1 {
        return max_range;
    }
    (mean_rank - 1.0) / (u as f64 - 1.0) * max_range
}

pub fn generate_combined_score(
    member_scores: &[Vec<f64>],
    thresholds: &[f64],
    separation_threshold: f64,
    max_range: f64,
) -> Result<Vec<CombinedScore>> {
    let first = member_scores
        .first()
        .ok_or_else(|| Error::invalid("no ensemble members"))?;
    let u = first.len();
    if member_scores.iter().any(|s| s.len() != u) {
        return Err(Error::invalid("member score lists differ in length"));
    }
    if thresholds.len() != member_scores.len() {
        return Err(Error::invalid("one threshold per member is required"));
    }
    let ranks: Vec<Vec<usize>> = member_scores
        .iter()
        .map(|s| rank_by_score(s))
        .collect::<Result<_>>()?;
    let k = member_scores.len() as f64;
    Ok((0..u)
        .map(|i| {
            let mut nv: i32 = if first[i] >= thresholds[0] { 1 } else { -1 };
            for (m, scores) in member_scores.iter().enumerate().skip(1) {
                let positive = scores[i] >= thresholds[m];
                if nv > 0 && positive {
                    nv += 1;
                } else if nv < 0 && !positive {
                    nv -= 1;
                }
            }
            let fv: f64 = ranks.iter().map(|r| fvote(r[i], u)).sum();
            let rs = ranks.iter().map(|r| r[i] as f64).sum::<f64>() / k;
            let ns = norm_rank(rs, u, max_range);
            let finv = if nv >= 1 { fv } else { nv as f64 };
            CombinedScore {
                index: i,
                id: i.to_string(),
                score: finv * separation_threshold + ns,
                nv,
                fv,
                rs,
                ns,
            }
        })
        .collect())
}

/// Sorts by score descending, earlier index first among ties.
pub fn sort_combined(scores: &mut [CombinedScore]) {
    scores.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.index.cmp(&b.index)));
}

/// Star rating of one combined score.
///
/// Below the 3-star cutoff, the single-negative-vote band `(−2·ST + MR, 0)`
/// earns 2 stars and anything lower 1 star.
pub fn star_of(score: f64, config: &EnsembleConfig) -> u8 {
    let [s3, s4, s5] = config.star_cutoffs;
    if score >= s5 {
        5
    } else if score >= s4 {
        4
    } else if score >= s3 {
        3
    } else if score > -2.0 * config.separation_threshold + config.max_range {
        2
    } else {
        1
    }
}

pub fn assign_stars(scores: &[CombinedScore], config: &EnsembleConfig) -> Vec<u8> {
    scores.iter().map(|s| star_of(s.score, config)).collect()
}

/// Trains every member on rows `train` and combines their scores on rows `test`.
/// Output is in `test` order; `index` refers to the position within `test`.
pub fn relrank_on_context(
    context: &FeatureContext,
    labels: &[Label],
    train: &[usize],
    test: &[usize],
    config: &EnsembleConfig,
) -> Result<Vec<CombinedScore>> {
    config.validate()?;
    let member_scores: Vec<Vec<f64>> = config
        .members
        .iter()
        .map(|&(cfg, feature)| {
            let m = Method { id: 0, feature, config: cfg };
            fit_and_score(&m, context, labels, train, test).map(|(_, s)| s)
        })
        .collect::<Result<_>>()?;
    generate_combined_score(
        &member_scores,
        &config.member_thresholds,
        config.separation_threshold,
        config.max_range,
    )
}

/// Rates `unlabeled` using models trained on `labeled`, best first.
///
/// Features are built over both corpora together.
pub fn relrank(
    labeled: &Corpus,
    unlabeled: &Corpus,
    config: &EnsembleConfig,
    embeddings: Option<&EmbeddingTable>,
) -> Result<Vec<CombinedScore>> {
    if unlabeled.is_empty() {
        return Err(Error::invalid("nothing to rate"));
    }
    let labels = labeled.labels()?;
    let mut all = labeled.citations().to_vec();
    all.extend(unlabeled.citations().iter().cloned());
    let combined = Corpus::new(format!("{}+{}", labeled.name(), unlabeled.name()), all)?;
    let context = FeatureContext::build(&combined, embeddings)?;
    let nl = labeled.len();
    let train: Vec<usize> = (0..nl).collect();
    let test: Vec<usize> = (nl..combined.len()).collect();
    let mut padded = labels;
    padded.resize(combined.len(), Label::Irrelevant);
    let mut out = relrank_on_context(&context, &padded, &train, &test, config)?;
    for s in &mut out {
        s.id = unlabeled.citations()[s.index].id.clone();
    }
    sort_combined(&mut out);
    Ok(out)
}
