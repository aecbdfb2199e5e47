use rand::Rng;

use screenkit::corpus::Label;
use screenkit::rng::seeded;
use screenkit::svm::{find_most_violated, train_multivariate_traced, Loss, MultivariateLoss, TrainConfig};
use screenkit::synth::gaussian_dense;

/// Loss of a predicted labeling, recomputed from raw counts.
fn delta(truth: &[bool], pred: &[bool], loss: MultivariateLoss) -> f64 {
    let n = truth.len() as f64;
    let (mut tp, mut fp, mut fneg, mut tn) = (0.0, 0.0, 0.0, 0.0);
    for (&t, &p) in truth.iter().zip(pred) {
        match (t, p) {
            (true, true) => tp += 1.0,
            (false, true) => fp += 1.0,
            (true, false) => fneg += 1.0,
            (false, false) => tn += 1.0,
        }
    }
    let (pos, neg) = (tp + fneg, fp + tn);
    let lp = fneg / pos;
    let ln = fp / neg;
    match loss {
        MultivariateLoss::Error => (fp + fneg) / n,
        MultivariateLoss::Am => (lp + ln) / 2.0,
        MultivariateLoss::QuadMean => ((lp * lp + ln * ln) / 2.0).sqrt(),
        MultivariateLoss::Kld => {
            let e = 1.0 / (2.0 * n);
            let sm = |c: f64| (c / n + e) / (1.0 + 2.0 * e);
            let term = |p: f64, q: f64| if p > 0.0 { p * (p / q).ln() } else { 0.0 };
            (term(sm(pos), sm(tp + fp)) + term(sm(neg), sm(fneg + tn))).max(0.0)
        }
        MultivariateLoss::Auc => unreachable!(),
    }
}

/// Maximum of `Δ(ȳ) − Σ_i (y_i − ȳ_i) s_i / (2n)` over all `2^n` labelings.
fn brute_contingency(scores: &[f64], truth: &[bool], loss: MultivariateLoss) -> f64 {
    let n = scores.len();
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << n) {
        let pred: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        let mut margin = 0.0;
        for i in 0..n {
            if pred[i] != truth[i] {
                margin += if truth[i] { scores[i] } else { -scores[i] };
            }
        }
        best = best.max(delta(truth, &pred, loss) - margin / n as f64);
    }
    best
}

/// Maximum over every subset of positive/negative pairs.
fn brute_auc(scores: &[f64], truth: &[bool]) -> f64 {
    let pos: Vec<f64> = (0..scores.len()).filter(|&i| truth[i]).map(|i| scores[i]).collect();
    let neg: Vec<f64> = (0..scores.len()).filter(|&i| !truth[i]).map(|i| scores[i]).collect();
    let pairs: Vec<f64> = pos.iter().flat_map(|p| neg.iter().map(move |q| 1.0 - (p - q))).collect();
    let k = pairs.len();
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << k) {
        let v: f64 = (0..k).filter(|&j| mask >> j & 1 == 1).map(|j| pairs[j]).sum();
        best = best.max(v / k as f64);
    }
    best
}

fn instance(r: &mut impl Rng, n: usize) -> (Vec<f64>, Vec<bool>) {
    loop {
        let truth: Vec<bool> = (0..n).map(|_| r.gen_bool(0.35)).collect();
        if truth.iter().any(|&t| t) && truth.iter().any(|&t| !t) {
            let coarse = r.gen_bool(0.3);
            let scores = (0..n)
                .map(|_| {
                    let s: f64 = r.gen_range(-2.0..2.0);
                    if coarse {
                        s.round()
                    } else {
                        s
                    }
                })
                .collect();
            return (scores, truth);
        }
    }
}

fn labels(truth: &[bool]) -> Vec<Label> {
    truth.iter().map(|&t| if t { Label::Relevant } else { Label::Irrelevant }).collect()
}

#[test]
fn contingency_losses_match_exhaustive_search() {
    let mut r = seeded(11);
    for loss in [MultivariateLoss::Kld, MultivariateLoss::QuadMean, MultivariateLoss::Am, MultivariateLoss::Error] {
        for _ in 0..60 {
            let n = r.gen_range(2..=12);
            let (s, t) = instance(&mut r, n);
            let mv = find_most_violated(&s, &labels(&t), loss).unwrap();
            let expected = brute_contingency(&s, &t, loss);
            assert!((mv.value - expected).abs() < 1e-9, "{loss:?} n={n}: {} vs {expected}", mv.value);

            // the returned labeling and coefficients describe the same constraint
            let pred: Vec<bool> = mv.labels.as_ref().unwrap().iter().map(|l| l.is_relevant()).collect();
            assert!((mv.loss - delta(&t, &pred, loss)).abs() < 1e-12);
            let margin: f64 = mv.coefficients.iter().zip(&s).map(|(c, x)| c * x).sum();
            assert!((mv.value - (mv.loss - margin)).abs() < 1e-9);
        }
    }
}

#[test]
fn auc_matches_pair_subset_search() {
    let mut r = seeded(12);
    let mut checked = 0;
    while checked < 80 {
        let n = r.gen_range(2..=9);
        let (s, t) = instance(&mut r, n);
        let p = t.iter().filter(|&&x| x).count();
        if p * (n - p) > 20 {
            continue;
        }
        let mv = find_most_violated(&s, &labels(&t), MultivariateLoss::Auc).unwrap();
        let expected = brute_auc(&s, &t);
        assert!((mv.value - expected).abs() < 1e-9, "n={n}: {} vs {expected}", mv.value);
        assert!((0.0..=1.0).contains(&mv.loss));
        checked += 1;
    }
}

#[test]
fn cutting_plane_terminates_with_certified_gap() {
    for seed in 0..20 {
        let (x, y) = gaussian_dense(160, 20, 10, 1.5, 500 + seed);
        for loss in [Loss::Auc, Loss::Kld, Loss::QuadMean] {
            let config = TrainConfig::new(loss, true);
            let (_, report) = train_multivariate_traced(&x, &y, &config).unwrap();
            assert!(report.converged, "seed {seed} {loss:?}");
            assert!(report.iterations <= 200);
            let last = report.steps.last().unwrap();
            assert!(last.violation <= last.working_set_slack + config.epsilon + 1e-9);
            assert!(report.steps.windows(2).all(|w| w[1].gap <= w[0].gap + 1e-9));
        }
    }
}
