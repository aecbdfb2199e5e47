//! Linear max-margin classifiers.
//!
//! All trainers produce a [`LinearModel`] scoring `w·x + b`. The intercept is
//! trained as the weight of an implicit constant feature when
//! `use_intercept` is set, and is fixed to zero otherwise.

mod hinge;
mod structural;
mod transductive;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub use hinge::{train_weighted_hinge, train_weighted_hinge_traced, HingeReport};
pub use structural::{
    contingency_loss, find_most_violated, train_multivariate, train_multivariate_traced,
    ContingencyLoss, CuttingPlaneReport, CuttingPlaneStep, MostViolated, MultivariateLoss,
};
pub use transductive::train_transductive;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Hinge,
    CostHinge,
    Transductive,
    Auc,
    Kld,
    QuadMean,
}

impl Loss {
    pub fn multivariate(self) -> Option<MultivariateLoss> {
        match self {
            Loss::Auc => Some(MultivariateLoss::Auc),
            Loss::Kld => Some(MultivariateLoss::Kld),
            Loss::QuadMean => Some(MultivariateLoss::QuadMean),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Loss::Hinge => "hinge",
            Loss::CostHinge => "cost_hinge",
            Loss::Transductive => "transductive",
            Loss::Auc => "auc",
            Loss::Kld => "kld",
            Loss::QuadMean => "quadmean",
        }
    }

    pub fn parse(s: &str) -> Option<Loss> {
        Some(match s {
            "hinge" => Loss::Hinge,
            "cost_hinge" => Loss::CostHinge,
            "transductive" => Loss::Transductive,
            "auc" => Loss::Auc,
            "kld" => Loss::Kld,
            "quadmean" => Loss::QuadMean,
            _ => return None,
        })
    }
}

/// A positive real parameter, or `Auto` to derive it from the training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    Auto,
    Value(f64),
}

impl Param {
    pub fn value(self) -> Option<f64> {
        match self {
            Param::Auto => None,
            Param::Value(v) => Some(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: Loss,
    pub use_intercept: bool,
    pub cost_c: Param,
    /// Relevant-class cost multiplier; only used by `CostHinge`.
    pub j_ratio: Param,
    pub epsilon: f64,
    pub max_iters: usize,
}

impl TrainConfig {
    pub fn new(loss: Loss, use_intercept: bool) -> Self {
        let (epsilon, max_iters) = match loss {
            Loss::Auc | Loss::Kld | Loss::QuadMean => (0.01, 200),
            _ => (0.05, 1000),
        };
        TrainConfig {
            loss,
            use_intercept,
            cost_c: Param::Auto,
            j_ratio: if loss == Loss::CostHinge { Param::Auto } else { Param::Value(1.0) },
            epsilon,
            max_iters,
        }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.cost_c = Param::Value(c);
        self
    }

    pub fn with_j(mut self, j: f64) -> Self {
        self.j_ratio = Param::Value(j);
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    /// Replaces `Auto` parameters with values derived from the training set.
    ///
    /// Hinge-type losses use [`default_c`]; multivariate losses use the
    /// error-rate equivalent `default_c * n / 100` (losses measured in percent).
    pub fn resolve(&self, features: &FeatureMatrix, labels: &[Label]) -> Result<TrainConfig> {
        let mut out = *self;
        if self.cost_c == Param::Auto {
            let base = default_c(features)?;
            let c = if self.loss.multivariate().is_some() {
                base * features.n() as f64 / 100.0
            } else {
                base
            };
            out.cost_c = Param::Value(c);
        }
        out.j_ratio = match (self.loss, self.j_ratio) {
            (Loss::CostHinge, Param::Auto) => Param::Value(resolve_j(labels)?),
            (Loss::CostHinge, p) => p,
            _ => Param::Value(1.0),
        };
        if let Some(c) = out.cost_c.value() {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::invalid(format!("C must be positive, got {c}")));
            }
        }
        Ok(out)
    }

    fn c(&self) -> f64 {
        self.cost_c.value().expect("config resolved before training")
    }

    fn j(&self) -> f64 {
        self.j_ratio.value().unwrap_or(1.0)
    }
}

/// SVM-light's default trade-off: `1 / b²` with `b` the mean Euclidean norm of the rows.
pub fn default_c(features: &FeatureMatrix) -> Result<f64> {
    let n = features.n();
    if n == 0 {
        return Err(Error::invalid("no training instances"));
    }
    let b = (0..n).map(|i| features.sq_norm(i).sqrt()).sum::<f64>() / n as f64;
    if b == 0.0 {
        return Err(Error::invalid("all feature vectors are zero"));
    }
    Ok(1.0 / (b * b))
}

/// `#irrelevant / #relevant` over the training labels.
pub fn resolve_j(labels: &[Label]) -> Result<f64> {
    let pos = labels.iter().filter(|l| l.is_relevant()).count();
    let neg = labels.len() - pos;
    if pos == 0 {
        return Err(Error::ResolveJ("no relevant citations".into()));
    }
    if neg == 0 {
        return Err(Error::ResolveJ("no irrelevant citations".into()));
    }
    Ok(neg as f64 / pos as f64)
}

pub(crate) fn check_two_classes(labels: &[Label], n: usize) -> Result<()> {
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: labels.len(),
        });
    }
    let pos = labels.iter().filter(|l| l.is_relevant()).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::Training("both classes must be present".into()));
    }
    Ok(())
}

/// `x·w[..d] + w[d]` when the intercept slot is present.
#[inline]
pub(crate) fn aug_dot(x: &FeatureMatrix, i: usize, w: &[f64], bias: bool) -> f64 {
    let d = x.dim();
    let s = x.dot(i, &w[..d]);
    if bias {
        s + w[d]
    } else {
        s
    }
}

#[inline]
pub(crate) fn aug_add(x: &FeatureMatrix, i: usize, scale: f64, w: &mut [f64], bias: bool) {
    let d = x.dim();
    x.add_scaled(i, scale, &mut w[..d]);
    if bias {
        w[d] += scale;
    }
}

/// Confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ContingencyTable {
    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.fp + self.tn
    }

    pub fn total(&self) -> usize {
        self.positives() + self.negatives()
    }
}

pub const MODEL_FORMAT: &str = "screenkit-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub decision_threshold: f64,
    pub config: TrainConfig,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    loss: Loss,
    use_intercept: bool,
    c: Option<f64>,
    j: Option<f64>,
    dim: usize,
    model: LinearModel,
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn score(&self, features: &FeatureMatrix, i: usize) -> f64 {
        features.dot(i, &self.weights) + self.intercept
    }

    pub fn predict(&self, score: f64) -> Label {
        if score >= self.decision_threshold {
            Label::Relevant
        } else {
            Label::Irrelevant
        }
    }

    /// JSON with a versioned header; floats use shortest round-trip formatting.
    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            loss: self.config.loss,
            use_intercept: self.config.use_intercept,
            c: self.config.cost_c.value(),
            j: self.config.j_ratio.value(),
            dim: self.dim(),
            model: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<LinearModel> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::Format(format!(
                "unsupported model format {} v{}",
                file.format, file.version
            )));
        }
        if file.dim != file.model.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: file.dim,
                got: file.model.weights.len(),
            });
        }
        Ok(file.model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<LinearModel> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        LinearModel::from_json(&text)
    }
}

/// Decision values `w·x_i + b`.
pub fn score_citations(model: &LinearModel, features: &FeatureMatrix) -> Result<Vec<f64>> {
    if features.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: features.dim(),
        });
    }
    Ok((0..features.n()).map(|i| model.score(features, i)).collect())
}

/// Dispatches on `config.loss`. `unlabeled` is only consulted by the transductive trainer.
pub fn train(
    features: &FeatureMatrix,
    labels: &[Label],
    unlabeled: Option<&FeatureMatrix>,
    config: &TrainConfig,
) -> Result<LinearModel> {
    match config.loss {
        Loss::Hinge | Loss::CostHinge => train_weighted_hinge(features, labels, config),
        Loss::Transductive => {
            let empty;
            let u = match unlabeled {
                Some(u) => u,
                None => {
                    empty = features.select(&[]);
                    &empty
                }
            };
            train_transductive(features, labels, u, config)
        }
        Loss::Auc | Loss::Kld | Loss::QuadMean => train_multivariate(features, labels, config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::DenseMatrix;

    fn dense(rows: &[Vec<f64>]) -> FeatureMatrix {
        FeatureMatrix::Dense(DenseMatrix::from_rows(rows))
    }

    #[test]
    fn default_c_formula() {
        let x = dense(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        assert!((default_c(&x).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(default_c(&dense(&[vec![0.6, 0.8]])).unwrap(), 1.0);
        let unit = dense(&(0..7).map(|i| {
            let a = i as f64 * 0.3;
            vec![a.cos(), a.sin()]
        }).collect::<Vec<_>>());
        assert!((default_c(&unit).unwrap() - 1.0).abs() < 1e-12);
        assert!(default_c(&dense(&[vec![0.0, 0.0]])).is_err());
    }

    #[test]
    fn resolve_j_ratio() {
        let mut labels = vec![Label::Irrelevant; 90];
        labels.extend(vec![Label::Relevant; 10]);
        assert_eq!(resolve_j(&labels).unwrap(), 9.0);
        assert_eq!(resolve_j(&[Label::Relevant, Label::Irrelevant]).unwrap(), 1.0);
        let err = resolve_j(&[Label::Irrelevant; 3]).unwrap_err();
        assert!(err.to_string().starts_with("cannot resolve J"));
    }

    #[test]
    fn resolve_config() {
        let x = dense(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        let y = [Label::Relevant, Label::Irrelevant];
        let hinge = TrainConfig::new(Loss::CostHinge, true).resolve(&x, &y).unwrap();
        assert_eq!(hinge.cost_c, Param::Value(1.0 / 9.0));
        assert_eq!(hinge.j_ratio, Param::Value(1.0));
        let auc = TrainConfig::new(Loss::Auc, true).resolve(&x, &y).unwrap();
        assert!((auc.c() - 2.0 / 900.0).abs() < 1e-15);
        let fixed = TrainConfig::new(Loss::Hinge, false).with_c(3.0).resolve(&x, &y).unwrap();
        assert_eq!(fixed.c(), 3.0);
    }

    #[test]
    fn scores() {
        let m = LinearModel {
            weights: vec![1.0, 0.0],
            intercept: 0.0,
            decision_threshold: 0.0,
            config: TrainConfig::new(Loss::Hinge, false),
        };
        assert_eq!(score_citations(&m, &dense(&[vec![3.0, 5.0]])).unwrap(), vec![3.0]);
        let zero = LinearModel { weights: vec![0.0, 0.0], ..m.clone() };
        assert_eq!(score_citations(&zero, &dense(&[vec![3.0, 5.0], vec![-1.0, 2.0]])).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(
            score_citations(&m, &dense(&[vec![1.0, 2.0, 3.0]])),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        ));
        assert_eq!(m.predict(0.0), Label::Relevant);
        assert_eq!(m.predict(-1e-12), Label::Irrelevant);
    }

    #[test]
    fn model_json_round_trip_bit_exact() {
        let m = LinearModel {
            weights: vec![0.1, -1.0 / 3.0, 1e-300, f64::MAX],
            intercept: -std::f64::consts::FRAC_1_SQRT_2,
            decision_threshold: 0.0,
            config: TrainConfig::new(Loss::CostHinge, true).with_c(0.123456789).with_j(9.0),
        };
        let back = LinearModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.weights.iter().zip(&m.weights) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let bad = m.to_json().unwrap().replace("\"version\": 1", "\"version\": 9");
        assert!(LinearModel::from_json(&bad).is_err());
    }

    proptest::proptest! {
        #[test]
        fn score_is_linear(w in proptest::collection::vec(-3.0f64..3.0, 3), x in proptest::collection::vec(-3.0f64..3.0, 3), alpha in -4.0f64..4.0) {
            let m = LinearModel { weights: w, intercept: 0.0, decision_threshold: 0.0, config: TrainConfig::new(Loss::Hinge, false) };
            let f = dense(std::slice::from_ref(&x));
            let s = score_citations(&m, &f).unwrap()[0];
            let s2 = score_citations(&m, &f.scaled(alpha)).unwrap()[0];
            proptest::prop_assert!((s2 - alpha * s).abs() < 1e-9);
        }
    }
}
