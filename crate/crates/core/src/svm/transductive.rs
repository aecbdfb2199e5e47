//! Transductive SVM by label switching.
//!
//! Unlabeled rows get pseudo-labels: the top-scored fraction (equal to the
//! labeled prevalence) starts positive. Their cost is annealed from `1e-3·C`
//! up to `C` by doubling; at every level, pairs of opposite pseudo-labels
//! whose slacks sum to more than 2 are switched and the model retrained.

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

use super::hinge::{finish, solve_dual};
use super::{aug_dot, check_two_classes, train_weighted_hinge, LinearModel, Loss, TrainConfig};

const INITIAL_COST_FACTOR: f64 = 1e-3;
const MAX_SWAP_ROUNDS: usize = 100;

/// `+1` for the `round(prevalence·|U|)` highest scores (earlier index wins ties), `−1` otherwise.
pub(crate) fn initial_pseudo_labels(scores: &[f64], prevalence: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let n_pos = (prevalence * scores.len() as f64).round() as usize;
    let mut y = vec![-1.0; scores.len()];
    for &i in &order[..n_pos.min(scores.len())] {
        y[i] = 1.0;
    }
    y
}

pub fn train_transductive(
    labeled: &FeatureMatrix,
    labels: &[Label],
    unlabeled: &FeatureMatrix,
    config: &TrainConfig,
) -> Result<LinearModel> {
    check_two_classes(labels, labeled.n())?;
    let inductive = TrainConfig {
        loss: Loss::Hinge,
        ..*config
    };
    if unlabeled.n() == 0 {
        log::warn!("no unlabeled citations; training an inductive SVM instead");
        let mut m = train_weighted_hinge(labeled, labels, &inductive)?;
        m.config.loss = config.loss;
        return Ok(m);
    }
    let all = labeled
        .vstack(unlabeled)
        .ok_or_else(|| Error::invalid("labeled and unlabeled features differ in kind or dimension"))?;
    let resolved = TrainConfig {
        loss: Loss::Transductive,
        ..config.resolve(labeled, labels)?
    };
    let c = resolved.c();
    let bias = resolved.use_intercept;
    let (nl, nu) = (labeled.n(), unlabeled.n());

    let initial = train_weighted_hinge(labeled, labels, &inductive.with_c(c))?;
    let scores: Vec<f64> = (0..nu).map(|i| initial.score(unlabeled, i)).collect();
    let prevalence = labels.iter().filter(|l| l.is_relevant()).count() as f64 / nl as f64;
    let mut y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    y.extend(initial_pseudo_labels(&scores, prevalence));

    let mut cost = INITIAL_COST_FACTOR * c;
    let mut alpha: Option<Vec<f64>> = None;
    let mut w;
    loop {
        let upper: Vec<f64> = (0..nl + nu).map(|i| if i < nl { c } else { cost }).collect();
        let mut rounds = 0;
        loop {
            let sol = solve_dual(&all, &y, &upper, bias, resolved.epsilon, resolved.max_iters, alpha.take());
            w = sol.w;
            alpha = Some(sol.alpha);
            if rounds == MAX_SWAP_ROUNDS {
                log::warn!("transductive label switching hit {MAX_SWAP_ROUNDS} rounds at cost {cost:.3e}");
                break;
            }
            let slack = |i: usize| (1.0 - y[i] * aug_dot(&all, i, &w, bias)).max(0.0);
            let mut pos: Vec<(usize, f64)> = Vec::new();
            let mut neg: Vec<(usize, f64)> = Vec::new();
            for i in nl..nl + nu {
                let s = slack(i);
                if s > 0.0 {
                    if y[i] > 0.0 { pos.push((i, s)) } else { neg.push((i, s)) }
                }
            }
            pos.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            neg.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let mut swapped = 0;
            for (&(m, sm), &(l, sl)) in pos.iter().zip(&neg) {
                if sm + sl <= 2.0 {
                    break;
                }
                y[m] = -1.0;
                y[l] = 1.0;
                swapped += 1;
            }
            if swapped == 0 {
                break;
            }
            rounds += 1;
        }
        if cost >= c {
            break;
        }
        cost = (2.0 * cost).min(c);
    }
    Ok(finish(w, labeled.dim(), resolved))
}
