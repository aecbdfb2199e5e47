//! Structural (1-slack) SVM training against multivariate losses.
//!
//! A constraint is a direction `g = Σ c_i x̃_i` and a loss `Δ`, read as
//! `w·g ≥ Δ − ξ`. For labelings `ȳ` the coefficients are `c_i = y_i/n` on
//! the flipped instances, so the error-rate loss reproduces the averaged
//! hinge loss. For AUC, `g` sums `(x_i − x_j)/(P·N)` over swapped pairs.
//!
//! The trainer works in percent units (`Δ ∈ [0, 100]`), so `C` and `ε`
//! carry the same meaning as in SVM-perf.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

use super::hinge::finish;
use super::{aug_add, aug_dot, check_two_classes, ContingencyTable, LinearModel, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContingencyLoss {
    Error,
    Kld,
    QuadMean,
    Am,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultivariateLoss {
    Auc,
    Kld,
    QuadMean,
    Am,
    Error,
}

impl MultivariateLoss {
    fn contingency(self) -> Option<ContingencyLoss> {
        match self {
            MultivariateLoss::Auc => None,
            MultivariateLoss::Kld => Some(ContingencyLoss::Kld),
            MultivariateLoss::QuadMean => Some(ContingencyLoss::QuadMean),
            MultivariateLoss::Am => Some(ContingencyLoss::Am),
            MultivariateLoss::Error => Some(ContingencyLoss::Error),
        }
    }
}

fn kld_term(p: f64, q: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * (p / q).ln()
    }
}

pub fn contingency_loss(table: &ContingencyTable, loss: ContingencyLoss) -> Result<f64> {
    let pos = table.positives() as f64;
    let neg = table.negatives() as f64;
    let n = pos + neg;
    if n == 0.0 {
        return Err(Error::invalid("empty contingency table"));
    }
    let recall_losses = || -> Result<(f64, f64)> {
        if pos == 0.0 || neg == 0.0 {
            return Err(Error::invalid("recall-based loss needs both classes"));
        }
        Ok((table.fn_ as f64 / pos, table.fp as f64 / neg))
    };
    Ok(match loss {
        ContingencyLoss::Error => (table.fn_ + table.fp) as f64 / n,
        ContingencyLoss::Am => {
            let (lp, ln) = recall_losses()?;
            (lp + ln) / 2.0
        }
        ContingencyLoss::QuadMean => {
            let (lp, ln) = recall_losses()?;
            ((lp * lp + ln * ln) / 2.0).sqrt()
        }
        ContingencyLoss::Kld => {
            let eps = 1.0 / (2.0 * n);
            let smooth = |c: f64| (c / n + eps) / (1.0 + 2.0 * eps);
            let predicted_pos = (table.tp + table.fp) as f64;
            let (p, q) = (smooth(pos), smooth(predicted_pos));
            let (pn, qn) = (smooth(neg), smooth(n - predicted_pos));
            (kld_term(p, q) + kld_term(pn, qn)).max(0.0)
        }
    })
}

/// The highest-valued constraint at the current scores.
#[derive(Debug, Clone, PartialEq)]
pub struct MostViolated {
    /// `c_i` such that the constraint direction is `Σ c_i x̃_i`.
    pub coefficients: Vec<f64>,
    /// `Δ` of the chosen output, as a fraction.
    pub loss: f64,
    /// `Δ − Σ c_i s_i`, the slack the constraint demands.
    pub value: f64,
    /// The violating labeling, for contingency losses.
    pub labels: Option<Vec<Label>>,
}

pub fn find_most_violated(
    scores: &[f64],
    labels: &[Label],
    loss: MultivariateLoss,
) -> Result<MostViolated> {
    check_two_classes(labels, scores.len())?;
    Ok(match loss.contingency() {
        Some(cl) => most_violated_contingency(scores, labels, cl),
        None => most_violated_auc(scores, labels),
    })
}

fn most_violated_contingency(scores: &[f64], labels: &[Label], loss: ContingencyLoss) -> MostViolated {
    let n = scores.len();
    let nf = n as f64;
    let mut pos: Vec<usize> = (0..n).filter(|&i| labels[i].is_relevant()).collect();
    let mut neg: Vec<usize> = (0..n).filter(|&i| !labels[i].is_relevant()).collect();
    pos.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    neg.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let prefix = |idx: &[usize]| -> Vec<f64> {
        let mut acc = vec![0.0];
        for &i in idx {
            acc.push(acc.last().unwrap() + scores[i]);
        }
        acc
    };
    let (sp, sn) = (prefix(&pos), prefix(&neg));
    let (np, nn) = (pos.len(), neg.len());

    let mut best = (f64::NEG_INFINITY, 0, 0, 0.0);
    for a in 0..=np {
        for b in 0..=nn {
            let table = ContingencyTable {
                tp: np - a,
                fn_: a,
                fp: b,
                tn: nn - b,
            };
            let delta = contingency_loss(&table, loss).expect("both classes present");
            let value = delta - (sp[a] - sn[b]) / nf;
            if value > best.0 {
                best = (value, a, b, delta);
            }
        }
    }
    let (value, a, b, delta) = best;
    let mut coefficients = vec![0.0; n];
    let mut flipped = labels.to_vec();
    for &i in &pos[..a] {
        coefficients[i] = 1.0 / nf;
        flipped[i] = Label::Irrelevant;
    }
    for &i in &neg[..b] {
        coefficients[i] = -1.0 / nf;
        flipped[i] = Label::Relevant;
    }
    MostViolated {
        coefficients,
        loss: delta,
        value,
        labels: Some(flipped),
    }
}

/// A pair `(i, j)` of positive `i` and negative `j` is swapped when `1 − (s_i − s_j) > 0`.
#[inline]
pub(crate) fn pair_violated(si: f64, sj: f64) -> bool {
    1.0 - (si - sj) > 0.0
}

fn most_violated_auc(scores: &[f64], labels: &[Label]) -> MostViolated {
    let n = scores.len();
    let mut pos: Vec<f64> = Vec::new();
    let mut neg: Vec<f64> = Vec::new();
    for i in 0..n {
        if labels[i].is_relevant() {
            pos.push(scores[i]);
        } else {
            neg.push(scores[i]);
        }
    }
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let pairs = (pos.len() * neg.len()) as f64;
    let mut coefficients = vec![0.0; n];
    let mut swapped = 0usize;
    let mut margin = 0.0;
    for i in 0..n {
        let s = scores[i];
        if labels[i].is_relevant() {
            let count = neg.len() - neg.partition_point(|&sj| !pair_violated(s, sj));
            swapped += count;
            coefficients[i] = count as f64 / pairs;
            margin += count as f64 * s;
        } else {
            let count = pos.partition_point(|&si| pair_violated(si, s));
            coefficients[i] = -(count as f64) / pairs;
            margin -= count as f64 * s;
        }
    }
    let loss = swapped as f64 / pairs;
    MostViolated {
        coefficients,
        loss,
        value: loss - margin / pairs,
        labels: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuttingPlaneStep {
    /// Slack demanded by the most violated constraint at the current `w`.
    pub violation: f64,
    /// Largest slack over the working set at the current `w`.
    pub working_set_slack: f64,
    pub primal: f64,
    pub dual: f64,
    /// Best primal value seen minus best dual value seen.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuttingPlaneReport {
    pub iterations: usize,
    pub converged: bool,
    pub working_set_size: usize,
    pub steps: Vec<CuttingPlaneStep>,
    /// `max_j (Δ_j − w·g_j)` over the final working set.
    pub final_slack: f64,
}

struct WorkingSet {
    g: Vec<Vec<f64>>,
    delta: Vec<f64>,
    /// Gram matrix `g_j·g_k`; index 0 is the null constraint.
    gram: Vec<Vec<f64>>,
    alpha: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl WorkingSet {
    fn new(dim: usize, c: f64) -> Self {
        WorkingSet {
            g: vec![vec![0.0; dim]],
            delta: vec![0.0],
            gram: vec![vec![0.0]],
            alpha: vec![c],
        }
    }

    fn push(&mut self, g: Vec<f64>, delta: f64) {
        let row: Vec<f64> = self.g.iter().map(|h| dot(h, &g)).collect();
        let self_k = dot(&g, &g);
        for (r, &v) in self.gram.iter_mut().zip(&row) {
            r.push(v);
        }
        let mut row = row;
        row.push(self_k);
        self.gram.push(row);
        self.g.push(g);
        self.delta.push(delta);
        self.alpha.push(0.0);
    }

    fn weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.g[0].len()];
        for (a, g) in self.alpha.iter().zip(&self.g) {
            if *a != 0.0 {
                for (wk, gk) in w.iter_mut().zip(g) {
                    *wk += a * gk;
                }
            }
        }
        w
    }

    /// SMO on `min ½αᵀKα − Δᵀα` over the simplex `Σα = C, α ≥ 0`.
    fn optimize(&mut self, tol: f64, max_steps: usize) {
        let m = self.alpha.len();
        let mut grad: Vec<f64> = (0..m)
            .map(|j| dot(&self.gram[j], &self.alpha) - self.delta[j])
            .collect();
        for _ in 0..max_steps {
            let mut up = 0;
            for j in 1..m {
                if grad[j] < grad[up] {
                    up = j;
                }
            }
            let mut down = None::<usize>;
            for j in 0..m {
                if self.alpha[j] > 0.0 && down.is_none_or(|d| grad[j] > grad[d]) {
                    down = Some(j);
                }
            }
            let Some(down) = down else { break };
            let diff = grad[down] - grad[up];
            if diff < tol || up == down {
                break;
            }
            let curv = self.gram[up][up] + self.gram[down][down] - 2.0 * self.gram[up][down];
            let t = if curv > 1e-300 {
                (diff / curv).min(self.alpha[down])
            } else {
                self.alpha[down]
            };
            self.alpha[up] += t;
            self.alpha[down] -= t;
            if self.alpha[down] < 1e-300 {
                self.alpha[down] = 0.0;
            }
            for (j, g) in grad.iter_mut().enumerate() {
                *g += t * (self.gram[j][up] - self.gram[j][down]);
            }
        }
    }
}

pub fn train_multivariate(
    features: &FeatureMatrix,
    labels: &[Label],
    config: &TrainConfig,
) -> Result<LinearModel> {
    train_multivariate_traced(features, labels, config).map(|(m, _)| m)
}

const PERCENT: f64 = 100.0;

pub fn train_multivariate_traced(
    features: &FeatureMatrix,
    labels: &[Label],
    config: &TrainConfig,
) -> Result<(LinearModel, CuttingPlaneReport)> {
    let loss = config.loss.multivariate().ok_or_else(|| {
        Error::invalid(format!("{} is not a multivariate loss", config.loss.as_str()))
    })?;
    train_structural(features, labels, config, loss)
}

/// Cutting-plane training for any [`MultivariateLoss`]; `config.loss` only selects the default `C`.
pub(crate) fn train_structural(
    features: &FeatureMatrix,
    labels: &[Label],
    config: &TrainConfig,
    loss: MultivariateLoss,
) -> Result<(LinearModel, CuttingPlaneReport)> {
    check_two_classes(labels, features.n())?;
    let resolved = config.resolve(features, labels)?;
    let c = resolved.c();
    let bias = resolved.use_intercept;
    let n = features.n();
    let dim = features.dim() + usize::from(bias);
    let eps = resolved.epsilon;

    let mut ws = WorkingSet::new(dim, c);
    let mut w = vec![0.0; dim];
    let mut steps = Vec::new();
    let mut best_primal = f64::INFINITY;
    let mut best_dual = f64::NEG_INFINITY;
    let mut converged = false;
    let mut final_slack = 0.0;
    for _ in 0..resolved.max_iters {
        let scores: Vec<f64> = (0..n).map(|i| aug_dot(features, i, &w, bias)).collect();
        let mv = find_most_violated(&scores, labels, loss)?;
        let violation = PERCENT * mv.value;
        let ws_slack = (0..ws.g.len())
            .map(|j| ws.delta[j] - dot(&w, &ws.g[j]))
            .fold(0.0f64, f64::max);
        let half_norm = 0.5 * dot(&w, &w);
        best_primal = best_primal.min(half_norm + c * violation.max(0.0));
        let dual = dot(&ws.alpha, &ws.delta) - half_norm;
        best_dual = best_dual.max(dual);
        steps.push(CuttingPlaneStep {
            violation,
            working_set_slack: ws_slack,
            primal: half_norm + c * violation.max(0.0),
            dual,
            gap: best_primal - best_dual,
        });
        final_slack = ws_slack;
        if violation <= ws_slack + eps {
            converged = true;
            break;
        }
        let mut g = vec![0.0; dim];
        for (i, &ci) in mv.coefficients.iter().enumerate() {
            if ci != 0.0 {
                aug_add(features, i, PERCENT * ci, &mut g, bias);
            }
        }
        ws.push(g, PERCENT * mv.loss);
        ws.optimize(0.1 * eps, 200_000);
        w = ws.weights();
    }
    if !converged {
        log::warn!(
            "cutting-plane training reached max_iters={} (gap {:.6})",
            resolved.max_iters,
            steps.last().map_or(f64::NAN, |s| s.gap)
        );
    }
    let report = CuttingPlaneReport {
        iterations: steps.len(),
        converged,
        working_set_size: ws.g.len() - 1,
        steps,
        final_slack,
    };
    Ok((finish(w, features.dim(), resolved), report))
}
