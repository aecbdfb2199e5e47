use proptest::prelude::*;
use rand::Rng;

use screenkit::corpus::Label;
use screenkit::metrics::{classification_metrics, ranking_auc, ranking_auprc, utility, UTILITY_BETA};
use screenkit::rng::seeded;
use screenkit::svm::ContingencyTable;

fn lab(b: bool) -> Label {
    if b {
        Label::Relevant
    } else {
        Label::Irrelevant
    }
}

/// Counts every positive/negative pair, ties ½.
fn auc_pairs(scores: &[f64], labels: &[Label]) -> Option<f64> {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, li) in labels.iter().enumerate() {
        for (j, lj) in labels.iter().enumerate() {
            if li.is_relevant() && !lj.is_relevant() {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    (pairs > 0.0).then(|| wins / pairs)
}

/// Sweeps every distinct score as a threshold (predict relevant at `s ≥ t`) and
/// sums precision times the recall gained at each step.
fn auprc_sweep(scores: &[f64], labels: &[Label]) -> Option<f64> {
    let pos = labels.iter().filter(|l| l.is_relevant()).count() as f64;
    if pos == 0.0 {
        return None;
    }
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut prev_recall = 0.0;
    let mut area = 0.0;
    for t in thresholds {
        let predicted: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= t).collect();
        let tp = predicted.iter().filter(|&&i| labels[i].is_relevant()).count() as f64;
        let recall = tp / pos;
        let precision = tp / predicted.len() as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Some(area)
}

fn random_instance(seed: u64, n: usize) -> (Vec<f64>, Vec<Label>) {
    let mut r = seeded(seed);
    let prev = r.gen_range(0.02..0.5);
    let coarse = r.gen_bool(0.5);
    let labels: Vec<Label> = (0..n).map(|_| lab(r.gen_bool(prev))).collect();
    let scores = labels
        .iter()
        .map(|l| {
            let s: f64 = r.gen_range(-1.0..1.0) + if l.is_relevant() { 0.4 } else { 0.0 };
            if coarse {
                (s * 8.0).round() / 8.0
            } else {
                s
            }
        })
        .collect();
    (scores, labels)
}

#[test]
fn auc_matches_pair_counting() {
    for seed in 0..100 {
        let (s, l) = random_instance(seed, 200);
        match (ranking_auc(&s, &l), auc_pairs(&s, &l)) {
            (Some(a), Some(b)) => assert!((a - b).abs() < 1e-9, "seed {seed}: {a} vs {b}"),
            (a, b) => assert_eq!(a, b),
        }
    }
}

#[test]
fn auprc_matches_threshold_sweep() {
    for seed in 0..100 {
        let (s, l) = random_instance(1000 + seed, 200);
        match (ranking_auprc(&s, &l), auprc_sweep(&s, &l)) {
            (Some(a), Some(b)) => assert!((a - b).abs() < 1e-6, "seed {seed}: {a} vs {b}"),
            (a, b) => assert_eq!(a, b),
        }
    }
}

#[test]
fn auprc_extremes() {
    let labels: Vec<Label> = (0..10).map(|i| lab(i < 3)).collect();
    let perfect: Vec<f64> = (0..10).map(|i| -(i as f64)).collect();
    assert_eq!(ranking_auprc(&perfect, &labels), Some(1.0));
    let one: Vec<Label> = (0..10).map(|i| lab(i == 0)).collect();
    let worst: Vec<f64> = (0..10).map(|i| i as f64).collect();
    assert!((ranking_auprc(&worst, &one).unwrap() - 0.1).abs() < 1e-12);
}

fn scalar_metrics(t: &ContingencyTable, beta: f64) -> [Option<f64>; 6] {
    let (tp, fp, tn, fneg) = (t.tp as f64, t.fp as f64, t.tn as f64, t.fn_ as f64);
    let div = |a: f64, b: f64| if b == 0.0 { None } else { Some(a / b) };
    let precision = div(tp, tp + fp);
    let recall = div(tp, tp + fneg);
    let f = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some((1.0 + beta * beta) * p * r / (beta * beta * p + r)),
        _ => None,
    };
    let accuracy = div(tp + tn, tp + tn + fp + fneg);
    let fnr = div(fneg, tp + fneg);
    let fpr = div(fp, fp + tn);
    let am = match (fnr, fpr) {
        (Some(a), Some(b)) => Some((a + b) / 2.0),
        _ => None,
    };
    let qd = match (fnr, fpr) {
        (Some(a), Some(b)) => Some(((a * a + b * b) / 2.0).sqrt()),
        _ => None,
    };
    [precision, recall, f, accuracy, am, qd]
}

#[test]
fn classification_metrics_match_scalar_recomputation() {
    let mut r = seeded(77);
    for _ in 0..1000 {
        let t = ContingencyTable {
            tp: r.gen_range(0..20),
            fp: r.gen_range(0..20),
            tn: r.gen_range(0..20),
            fn_: r.gen_range(0..20),
        };
        let m = classification_metrics(&t, 1.0);
        let expected = scalar_metrics(&t, 1.0);
        let got = [m.precision, m.recall, m.f_measure, m.accuracy, m.am_error, m.qd_error];
        for (g, e) in got.iter().zip(expected) {
            match (g, e) {
                (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12, "{t:?}: {a} vs {b}"),
                (a, b) => assert_eq!(*a, b, "{t:?}"),
            }
        }
    }
}

proptest! {
    #[test]
    fn auc_invariant_under_monotone_transform(
        raw in prop::collection::vec((-5.0f64..5.0, any::<bool>()), 2..60),
        k in -4i32..5,
    ) {
        let scores: Vec<f64> = raw.iter().map(|r| r.0).collect();
        let labels: Vec<Label> = raw.iter().map(|r| lab(r.1)).collect();
        // power-of-two scaling then cubing keeps order and ties exactly
        let transformed: Vec<f64> = scores.iter().map(|s| (2f64.powi(k) * s).powi(3)).collect();
        prop_assert_eq!(ranking_auc(&scores, &labels), ranking_auc(&transformed, &labels));
    }

    #[test]
    fn auc_of_negated_scores_complements(
        raw in prop::collection::vec((-5.0f64..5.0, any::<bool>()), 2..60),
    ) {
        let mut scores: Vec<f64> = raw.iter().map(|r| r.0).collect();
        scores.sort_by(f64::total_cmp);
        scores.dedup();
        prop_assume!(scores.len() == raw.len());
        let scores: Vec<f64> = raw.iter().map(|r| r.0).collect();
        let labels: Vec<Label> = raw.iter().map(|r| lab(r.1)).collect();
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        if let (Some(a), Some(b)) = (ranking_auc(&scores, &labels), ranking_auc(&neg, &labels)) {
            prop_assert!((a + b - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn utility_affine_and_bounded(y in 0.0f64..=1.0, b in 0.0f64..=1.0, y2 in 0.0f64..=1.0, t in 0.0f64..=1.0) {
        let u = utility(y, b, UTILITY_BETA);
        prop_assert!((0.0..=1.0).contains(&u));
        // affine in yield: u at a convex combination equals the combination of u
        let mixed = utility(t * y + (1.0 - t) * y2, b, UTILITY_BETA);
        let combo = t * u + (1.0 - t) * utility(y2, b, UTILITY_BETA);
        prop_assert!((mixed - combo).abs() < 1e-12);
    }
}
