use proptest::prelude::*;

use screenkit::metrics::Metric;
use screenkit::stats::{equivalence_groups_table, paired_t_test, MethodTable};

fn table_strategy() -> impl Strategy<Value = (Vec<Vec<Option<f64>>>, bool)> {
    (2usize..7, 3usize..9, any::<bool>()).prop_flat_map(|(methods, datasets, lower)| {
        (
            prop::collection::vec(
                (0.0f64..1.0, prop::collection::vec(prop::option::weighted(0.9, 0.0f64..1.0), datasets)),
                methods,
            )
            .prop_map(|rows| {
                rows.into_iter()
                    .map(|(shift, row)| row.into_iter().map(|v| v.map(|x| 0.3 * x + shift)).collect())
                    .collect()
            }),
            Just(lower),
        )
    })
}

fn metric(lower: bool) -> Metric {
    if lower {
        Metric::AmError
    } else {
        Metric::Auc
    }
}

proptest! {
    #[test]
    fn groups_partition_the_methods((values, lower) in table_strategy()) {
        let ids: Vec<u32> = (1..=values.len() as u32).map(|i| i * 3).collect();
        let table = MethodTable { methods: ids.clone(), values };
        let g = equivalence_groups_table(&table, metric(lower), 0.05).unwrap();
        let mut seen: Vec<u32> = g.groups.iter().flat_map(|r| r.methods.clone()).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, ids);
        for r in &g.groups {
            prop_assert!(r.methods.contains(&r.best));
            prop_assert!(r.methods.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(r.p_values.len(), r.methods.len() - 1);
        }
        // groups come out best first
        let reps: Vec<f64> = g.groups.iter().map(|r| r.representative).filter(|v| v.is_finite()).collect();
        let ordered = if lower {
            reps.windows(2).all(|w| w[0] <= w[1])
        } else {
            reps.windows(2).all(|w| w[0] >= w[1])
        };
        prop_assert!(ordered);
    }

    #[test]
    fn grouping_ignores_method_order_and_names(
        (values, lower) in table_strategy(),
        rotate in 0usize..7,
    ) {
        let k = values.len();
        let ids: Vec<u32> = (0..k as u32).collect();
        let base = equivalence_groups_table(&MethodTable { methods: ids, values: values.clone() }, metric(lower), 0.05).unwrap();

        // rotate the rows and give each method an unrelated id
        let perm: Vec<usize> = (0..k).map(|i| (i + rotate) % k).collect();
        let rename = |orig: usize| 1000 - 7 * orig as u32;
        let table = MethodTable {
            methods: perm.iter().map(|&o| rename(o)).collect(),
            values: perm.iter().map(|&o| values[o].clone()).collect(),
        };
        let moved = equivalence_groups_table(&table, metric(lower), 0.05).unwrap();

        // ties in the mean are broken by id, so only tie-free tables must agree
        let means: Vec<f64> = values
            .iter()
            .map(|r| {
                let v: Vec<f64> = r.iter().flatten().copied().collect();
                if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 }
            })
            .collect();
        prop_assume!(means.iter().all(|m| m.is_finite()));
        let mut sorted = means.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assume!(sorted.windows(2).all(|w| w[0] < w[1]));

        let normalize = |groups: Vec<Vec<u32>>| {
            let mut g: Vec<Vec<u32>> = groups.into_iter().map(|mut x| { x.sort_unstable(); x }).collect();
            g.sort();
            g
        };
        let a = normalize(base.groups.iter().map(|r| r.methods.clone()).collect());
        let b = normalize(
            moved
                .groups
                .iter()
                .map(|r| r.methods.iter().map(|&id| (1000 - id) / 7).collect())
                .collect(),
        );
        prop_assert_eq!(a, b);
    }

    #[test]
    fn t_test_is_antisymmetric(
        pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..30),
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let ab = paired_t_test(&a, &b).unwrap();
        let ba = paired_t_test(&b, &a).unwrap();
        prop_assert!((ab.p - ba.p).abs() < 1e-12);
        prop_assert!(ab.t == -ba.t || (ab.t - (-ba.t)).abs() < 1e-9 * ab.t.abs().max(1.0));
        prop_assert!((0.0..=1.0).contains(&ab.p));
    }
}

#[test]
fn t_test_reference_value() {
    // differences 1..=5: t = 3 / sqrt(2.5 / 5) = 4.2426, df = 4
    let a = [1.0, 2.0, 3.0, 4.0, 5.0];
    let b = [0.0; 5];
    let r = paired_t_test(&a, &b).unwrap();
    assert_eq!(r.df, 4);
    assert!((r.t - 18f64.sqrt()).abs() < 1e-12);
    assert!((r.p - 0.013236).abs() < 1e-5, "{}", r.p);
}
