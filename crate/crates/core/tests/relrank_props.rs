use proptest::prelude::*;

use screenkit::relrank::{generate_combined_score, star_of, EnsembleConfig};

const ST: f64 = 1000.0;
const MR: f64 = 800.0;

/// Rank counted directly: one plus the number of items ranked below `i`.
fn rank(scores: &[f64], i: usize) -> usize {
    1 + (0..scores.len())
        .filter(|&j| scores[j] < scores[i] || (scores[j] == scores[i] && j > i))
        .count()
}

fn member_scores() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..40).prop_flat_map(|u| {
        prop::collection::vec(
            prop::collection::vec(prop_oneof![-3.0f64..3.0, (-3i32..=3).prop_map(f64::from)], u),
            3,
        )
    })
}

proptest! {
    #[test]
    fn combined_score_matches_direct_formula(members in member_scores()) {
        let u = members[0].len();
        let out = generate_combined_score(&members, &[0.0; 3], ST, MR).unwrap();
        for (i, c) in out.iter().enumerate() {
            let votes: Vec<bool> = members.iter().map(|m| m[i] >= 0.0).collect();
            // agreement with the first member extends the streak, disagreement is ignored
            let agree = votes.iter().filter(|&&v| v == votes[0]).count() as i32;
            let nv = if votes[0] { agree } else { -agree };
            prop_assert_eq!(c.nv, nv);
            let ranks: Vec<usize> = members.iter().map(|m| rank(m, i)).collect();
            let fv: f64 = ranks.iter().map(|&r| (-((u - r) as f64) / u as f64).exp()).sum();
            prop_assert!((c.fv - fv).abs() < 1e-12);
            let rs = ranks.iter().sum::<usize>() as f64 / 3.0;
            let ns = if u == 1 { MR } else { (rs - 1.0) / (u as f64 - 1.0) * MR };
            prop_assert!((c.ns - ns).abs() < 1e-9);
            let expected = if nv >= 1 { fv * ST + ns } else { nv as f64 * ST + ns };
            prop_assert!((c.score - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn vote_bands_do_not_overlap(members in member_scores()) {
        let out = generate_combined_score(&members, &[0.0; 3], ST, MR).unwrap();
        for a in &out {
            prop_assert!((0.0..=MR).contains(&a.ns));
            // each fractional vote lies in (e^-1, 1]
            prop_assert!(a.fv / 3.0 > 0.36 && a.fv / 3.0 <= 1.0);
            for b in &out {
                if a.nv >= 1 && b.nv < 0 {
                    prop_assert!(a.score > b.score);
                }
                if a.nv < 0 && b.nv < a.nv {
                    prop_assert!(a.score > b.score);
                }
            }
        }
    }

    #[test]
    fn stars_follow_votes(members in member_scores()) {
        let config = EnsembleConfig::default();
        let out = generate_combined_score(&members, &[0.0; 3], ST, MR).unwrap();
        for c in &out {
            let s = star_of(c.score, &config);
            match c.nv {
                n if n >= 1 => prop_assert!(s >= 3),
                -1 => prop_assert_eq!(s, 2),
                _ => prop_assert_eq!(s, 1),
            }
        }
    }

    #[test]
    fn star_sets_are_nested(a in -4000.0f64..4000.0, b in -4000.0f64..4000.0) {
        let config = EnsembleConfig::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(star_of(lo, &config) <= star_of(hi, &config));
    }
}

#[test]
fn star_cutoffs() {
    let c = EnsembleConfig::default();
    assert_eq!(star_of(2500.0, &c), 5);
    assert_eq!(star_of(2499.9, &c), 4);
    assert_eq!(star_of(2000.0, &c), 4);
    assert_eq!(star_of(0.0, &c), 3);
    assert_eq!(star_of(-1.0, &c), 2);
    assert_eq!(star_of(-1199.9, &c), 2);
    assert_eq!(star_of(-2.0 * ST + MR, &c), 1);
}
