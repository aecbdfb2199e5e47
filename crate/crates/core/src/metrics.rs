//! Classification, ranking and screening-workload metrics.
//!
//! Metrics that are undefined on a given input (empty denominators) are
//! `None`, never zero.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::svm::ContingencyTable;

pub const UTILITY_BETA: f64 = 19.0;

pub fn confusion(scores: &[f64], labels: &[Label], threshold: f64) -> Result<ContingencyTable> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::invalid("no scores"));
    }
    let mut t = ContingencyTable::default();
    for (&s, l) in scores.iter().zip(labels) {
        match (s >= threshold, l.is_relevant()) {
            (true, true) => t.tp += 1,
            (true, false) => t.fp += 1,
            (false, true) => t.fn_ += 1,
            (false, false) => t.tn += 1,
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f_measure: Option<f64>,
    pub accuracy: Option<f64>,
    pub am_error: Option<f64>,
    pub qd_error: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn classification_metrics(t: &ContingencyTable, beta: f64) -> ClassificationMetrics {
    let precision = ratio(t.tp, t.tp + t.fp);
    let recall = ratio(t.tp, t.tp + t.fn_);
    let f_measure = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => {
            let b2 = beta * beta;
            Some((1.0 + b2) * p * r / (b2 * p + r))
        }
        _ => None,
    };
    let fnr = ratio(t.fn_, t.tp + t.fn_);
    let fpr = ratio(t.fp, t.fp + t.tn);
    let (am_error, qd_error) = match (fnr, fpr) {
        (Some(a), Some(b)) => (Some((a + b) / 2.0), Some(((a * a + b * b) / 2.0).sqrt())),
        _ => (None, None),
    };
    ClassificationMetrics {
        precision,
        recall,
        f_measure,
        accuracy: ratio(t.tp + t.tn, t.total()),
        am_error,
        qd_error,
    }
}

/// Mann–Whitney AUC with ties counted ½; `None` without both classes.
pub fn ranking_auc(scores: &[f64], labels: &[Label]) -> Option<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let pos = labels.iter().filter(|l| l.is_relevant()).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    // Twice the Mann–Whitney U: each tied block contributes its negatives below
    // plus half of its own negatives for every positive in it.
    let mut negatives_below = 0usize;
    let mut twice_u = 0usize;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut p, mut n) = (0, 0);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]].is_relevant() {
                p += 1;
            } else {
                n += 1;
            }
            j += 1;
        }
        twice_u += p * (2 * negatives_below + n);
        negatives_below += n;
        i = j;
    }
    Some(twice_u as f64 / (2.0 * pos as f64 * neg as f64))
}

/// Step-wise area under the precision–recall curve over a descending sweep;
/// tied scores enter together. `None` without positives.
pub fn ranking_auprc(scores: &[f64], labels: &[Label]) -> Option<f64> {
    let pos = labels.iter().filter(|l| l.is_relevant()).count();
    if pos == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut area = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let mut block_tp = 0;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]].is_relevant() {
                block_tp += 1;
            }
            j += 1;
        }
        tp += block_tp;
        seen += j - i;
        area += block_tp as f64 / pos as f64 * (tp as f64 / seen as f64);
        i = j;
    }
    Some(area)
}

/// Screening inputs: the test split is the unlabeled set `U` and the training
/// split the screened labeled set `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreeningCounts {
    pub test: ContingencyTable,
    pub train_relevant: usize,
    pub train_irrelevant: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScreeningMetrics {
    pub yield_: Option<f64>,
    pub burden: Option<f64>,
    pub utility: Option<f64>,
}

pub fn screening_metrics(c: &ScreeningCounts, beta: f64) -> ScreeningMetrics {
    let t = &c.test;
    let total = c.train_relevant + c.train_irrelevant + t.total();
    let burden = ratio(c.train_relevant + c.train_irrelevant + t.tp + t.fp, total);
    let yield_ = ratio(c.train_relevant + t.tp, c.train_relevant + t.tp + t.fn_);
    let utility = match (yield_, burden) {
        (Some(y), Some(b)) => Some(utility(y, b, beta)),
        _ => None,
    };
    ScreeningMetrics { yield_, burden, utility }
}

pub fn utility(yield_: f64, burden: f64, beta: f64) -> f64 {
    (beta * yield_ + (1.0 - burden)) / (beta + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Precision,
    Recall,
    FMeasure,
    Accuracy,
    Auc,
    Auprc,
    AmError,
    QdError,
    Yield,
    Burden,
    Utility,
}

impl Metric {
    pub const ALL: [Metric; 11] = [
        Metric::Precision,
        Metric::Recall,
        Metric::FMeasure,
        Metric::Accuracy,
        Metric::Auc,
        Metric::Auprc,
        Metric::AmError,
        Metric::QdError,
        Metric::Yield,
        Metric::Burden,
        Metric::Utility,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::FMeasure => "f_measure",
            Metric::Accuracy => "accuracy",
            Metric::Auc => "auc",
            Metric::Auprc => "auprc",
            Metric::AmError => "am_error",
            Metric::QdError => "qd_error",
            Metric::Yield => "yield",
            Metric::Burden => "burden",
            Metric::Utility => "utility",
        }
    }

    pub fn parse(s: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.as_str() == s)
    }

    /// Lower is better for error and workload metrics.
    pub fn lower_is_better(self) -> bool {
        matches!(self, Metric::AmError | Metric::QdError | Metric::Burden)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricReport {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f_measure: Option<f64>,
    pub accuracy: Option<f64>,
    pub auc: Option<f64>,
    pub auprc: Option<f64>,
    pub am_error: Option<f64>,
    pub qd_error: Option<f64>,
    pub yield_: Option<f64>,
    pub burden: Option<f64>,
    pub utility: Option<f64>,
}

impl MetricReport {
    pub fn get(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::FMeasure => self.f_measure,
            Metric::Accuracy => self.accuracy,
            Metric::Auc => self.auc,
            Metric::Auprc => self.auprc,
            Metric::AmError => self.am_error,
            Metric::QdError => self.qd_error,
            Metric::Yield => self.yield_,
            Metric::Burden => self.burden,
            Metric::Utility => self.utility,
        }
    }
}

/// All eleven metrics for one evaluation.
pub fn evaluate(
    scores: &[f64],
    labels: &[Label],
    threshold: f64,
    train_relevant: usize,
    train_irrelevant: usize,
) -> Result<MetricReport> {
    let table = confusion(scores, labels, threshold)?;
    let cm = classification_metrics(&table, 1.0);
    let sm = screening_metrics(
        &ScreeningCounts {
            test: table,
            train_relevant,
            train_irrelevant,
        },
        UTILITY_BETA,
    );
    Ok(MetricReport {
        precision: cm.precision,
        recall: cm.recall,
        f_measure: cm.f_measure,
        accuracy: cm.accuracy,
        auc: ranking_auc(scores, labels),
        auprc: ranking_auprc(scores, labels),
        am_error: cm.am_error,
        qd_error: cm.qd_error,
        yield_: sm.yield_,
        burden: sm.burden,
        utility: sm.utility,
    })
}
