//! Dual coordinate descent for the (weighted) L1-loss linear SVM.
//!
//! Solves `min_α ½αᵀQα − Σα` subject to `0 ≤ α_i ≤ U_i`, with
//! `Q_ij = y_i y_j x̃_i·x̃_j` and `x̃` the feature row, extended by a constant 1
//! when an intercept is trained. Instances are visited in index order.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

use super::{aug_add, aug_dot, check_two_classes, LinearModel, Loss, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HingeReport {
    pub epochs: usize,
    pub converged: bool,
    /// Dual objective `½‖w‖² − Σα` after each epoch (non-increasing).
    pub dual_objective: Vec<f64>,
    /// Primal objective `½‖w‖² + Σ U_i·max(0, 1 − y_i w·x̃_i)` after each epoch.
    pub primal_objective: Vec<f64>,
}

pub(crate) struct DualSolution {
    pub w: Vec<f64>,
    pub alpha: Vec<f64>,
    pub report: HingeReport,
}

fn sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub(crate) fn solve_dual(
    x: &FeatureMatrix,
    y: &[f64],
    upper: &[f64],
    bias: bool,
    epsilon: f64,
    max_epochs: usize,
    warm: Option<Vec<f64>>,
) -> DualSolution {
    let n = x.n();
    let dim = x.dim() + usize::from(bias);
    let qd: Vec<f64> = (0..n)
        .map(|i| x.sq_norm(i) + if bias { 1.0 } else { 0.0 })
        .collect();
    let mut alpha = match warm {
        Some(a) => a.iter().zip(upper).map(|(&a, &u)| a.clamp(0.0, u)).collect(),
        None => vec![0.0; n],
    };
    let mut w = vec![0.0; dim];
    for i in 0..n {
        if alpha[i] != 0.0 {
            aug_add(x, i, alpha[i] * y[i], &mut w, bias);
        }
    }

    let mut report = HingeReport {
        epochs: 0,
        converged: false,
        dual_objective: Vec::new(),
        primal_objective: Vec::new(),
    };
    for _ in 0..max_epochs {
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;
        for i in 0..n {
            let g = y[i] * aug_dot(x, i, &w, bias) - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= upper[i] {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg == 0.0 {
                continue;
            }
            let old = alpha[i];
            alpha[i] = if qd[i] > 0.0 {
                (old - g / qd[i]).clamp(0.0, upper[i])
            } else {
                upper[i]
            };
            let delta = (alpha[i] - old) * y[i];
            if delta != 0.0 {
                aug_add(x, i, delta, &mut w, bias);
            }
        }
        report.epochs += 1;
        let half_norm = 0.5 * sq(&w);
        report
            .dual_objective
            .push(half_norm - alpha.iter().sum::<f64>());
        let loss: f64 = (0..n)
            .map(|i| upper[i] * (1.0 - y[i] * aug_dot(x, i, &w, bias)).max(0.0))
            .sum();
        report.primal_objective.push(half_norm + loss);
        if pg_max - pg_min < epsilon {
            report.converged = true;
            break;
        }
    }
    DualSolution { w, alpha, report }
}

pub fn train_weighted_hinge(
    features: &FeatureMatrix,
    labels: &[Label],
    config: &TrainConfig,
) -> Result<LinearModel> {
    train_weighted_hinge_traced(features, labels, config).map(|(m, _)| m)
}

pub fn train_weighted_hinge_traced(
    features: &FeatureMatrix,
    labels: &[Label],
    config: &TrainConfig,
) -> Result<(LinearModel, HingeReport)> {
    if !matches!(config.loss, Loss::Hinge | Loss::CostHinge | Loss::Transductive) {
        return Err(Error::invalid(format!(
            "{} is not a hinge loss",
            config.loss.as_str()
        )));
    }
    check_two_classes(labels, features.n())?;
    let config = config.resolve(features, labels)?;
    let c = config.c();
    let j = if config.loss == Loss::CostHinge { config.j() } else { 1.0 };
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let upper: Vec<f64> = y.iter().map(|&s| if s > 0.0 { c * j } else { c }).collect();
    let sol = solve_dual(
        features,
        &y,
        &upper,
        config.use_intercept,
        config.epsilon,
        config.max_iters,
        None,
    );
    if !sol.report.converged {
        log::warn!(
            "hinge training stopped after {} epochs without converging; objective {:.6}",
            sol.report.epochs,
            sol.report.primal_objective.last().copied().unwrap_or(f64::NAN)
        );
    }
    Ok((finish(sol.w, features.dim(), config), sol.report))
}

pub(crate) fn finish(mut w: Vec<f64>, dim: usize, config: TrainConfig) -> LinearModel {
    let intercept = if config.use_intercept { w[dim] } else { 0.0 };
    w.truncate(dim);
    LinearModel {
        weights: w,
        intercept,
        decision_threshold: 0.0,
        config,
    }
}
