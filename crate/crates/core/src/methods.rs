//! The catalog of evaluated method configurations and the per-corpus
//! feature cache the harness trains them on.

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label};
use crate::error::{Error, Result};
use crate::features::{
    build_unibigram_vocab, embed_corpus, normalize, vectorize_corpus, EmbeddingTable, FeatureMatrix,
    Normalization,
};
use crate::svm::{self, LinearModel, Loss, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    UniBi,
    W2vRow,
    W2vCol,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::UniBi => "uni-bi",
            FeatureKind::W2vRow => "w2v-row",
            FeatureKind::W2vCol => "w2v-col",
        }
    }

    pub fn parse(s: &str) -> Option<FeatureKind> {
        Some(match s {
            "uni-bi" | "unibi" => FeatureKind::UniBi,
            "w2v-row" => FeatureKind::W2vRow,
            "w2v-col" => FeatureKind::W2vCol,
            _ => return None,
        })
    }

    pub fn needs_embeddings(self) -> bool {
        self != FeatureKind::UniBi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Method {
    pub id: u32,
    pub feature: FeatureKind,
    pub config: TrainConfig,
}

impl Method {
    pub fn name(&self) -> String {
        let c = &self.config;
        let b = u8::from(c.use_intercept);
        let algo = match c.loss {
            Loss::Hinge => "svm".to_string(),
            Loss::Transductive => "tsvm".to_string(),
            Loss::CostHinge => format!("svm-cost(J,b={b})"),
            Loss::Auc | Loss::Kld | Loss::QuadMean => format!("svm-perf(b={b},{})", c.loss.as_str()),
        };
        format!("{} {algo}", self.feature.as_str())
    }
}

/// All 18 configurations, ordered by id.
pub fn catalog() -> Vec<Method> {
    let m = |id, feature, loss, bias| Method {
        id,
        feature,
        config: TrainConfig::new(loss, bias),
    };
    let mut out = vec![
        m(1, FeatureKind::UniBi, Loss::Auc, false),
        m(2, FeatureKind::UniBi, Loss::Auc, true),
        m(3, FeatureKind::UniBi, Loss::Kld, true),
        m(4, FeatureKind::UniBi, Loss::QuadMean, true),
        m(5, FeatureKind::UniBi, Loss::Hinge, true),
        m(6, FeatureKind::UniBi, Loss::CostHinge, false),
        m(7, FeatureKind::UniBi, Loss::CostHinge, true),
        m(11, FeatureKind::UniBi, Loss::Transductive, true),
    ];
    for (base, feature) in [(20, FeatureKind::W2vRow), (30, FeatureKind::W2vCol)] {
        out.extend([
            m(base + 1, feature, Loss::Auc, true),
            m(base + 2, feature, Loss::Kld, true),
            m(base + 3, feature, Loss::QuadMean, true),
            m(base + 4, feature, Loss::CostHinge, false),
            m(base + 5, feature, Loss::CostHinge, true),
        ]);
    }
    out
}

pub fn method(id: u32) -> Option<Method> {
    catalog().into_iter().find(|m| m.id == id)
}

/// Parses "1,5,21" or "all".
pub fn parse_method_ids(spec: &str) -> Result<Vec<Method>> {
    if spec.trim() == "all" {
        return Ok(catalog());
    }
    spec.split(',')
        .map(|s| {
            let id: u32 = s
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad method id {s:?}")))?;
            method(id).ok_or_else(|| Error::invalid(format!("unknown method id {id}")))
        })
        .collect()
}

/// Features of one corpus in every representation the methods need, computed once.
///
/// The vocabulary and column statistics cover the whole corpus; folds slice rows.
#[derive(Debug, Clone)]
pub struct FeatureContext {
    unibi: FeatureMatrix,
    w2v_row: Option<FeatureMatrix>,
    w2v_col: Option<FeatureMatrix>,
    pub uncovered: usize,
}

impl FeatureContext {
    pub fn build(corpus: &Corpus, embeddings: Option<&EmbeddingTable>) -> Result<FeatureContext> {
        let vocab = build_unibigram_vocab(corpus)?;
        let unibi = FeatureMatrix::Sparse(vectorize_corpus(corpus, &vocab));
        let (w2v_row, w2v_col, uncovered) = match embeddings {
            Some(table) => {
                let (raw, uncovered) = embed_corpus(corpus, table);
                (
                    Some(FeatureMatrix::Dense(normalize(&raw, Normalization::Row))),
                    Some(FeatureMatrix::Dense(normalize(&raw, Normalization::Col))),
                    uncovered,
                )
            }
            None => (None, None, 0),
        };
        Ok(FeatureContext {
            unibi,
            w2v_row,
            w2v_col,
            uncovered,
        })
    }

    pub fn n(&self) -> usize {
        self.unibi.n()
    }

    pub fn features(&self, kind: FeatureKind) -> Result<&FeatureMatrix> {
        let m = match kind {
            FeatureKind::UniBi => Some(&self.unibi),
            FeatureKind::W2vRow => self.w2v_row.as_ref(),
            FeatureKind::W2vCol => self.w2v_col.as_ref(),
        };
        m.ok_or_else(|| Error::invalid(format!("{} features need an embedding table", kind.as_str())))
    }
}

/// Trains `method` on rows `train` and returns decision values for rows `test`.
///
/// The transductive method uses the test rows as its unlabeled set.
pub fn fit_and_score(
    method: &Method,
    context: &FeatureContext,
    labels: &[Label],
    train: &[usize],
    test: &[usize],
) -> Result<(LinearModel, Vec<f64>)> {
    let x = context.features(method.feature)?;
    let x_train = x.select(train);
    let x_test = x.select(test);
    let y: Vec<Label> = train.iter().map(|&i| labels[i]).collect();
    let unlabeled = (method.config.loss == Loss::Transductive).then_some(&x_test);
    let model = svm::train(&x_train, &y, unlabeled, &method.config)?;
    let scores = svm::score_citations(&model, &x_test)?;
    Ok((model, scores))
}
