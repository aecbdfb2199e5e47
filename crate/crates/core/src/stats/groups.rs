use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::Metric;

use super::grid::ExperimentGrid;
use super::lsu::lsu_select;
use super::ttest::paired_t_test;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankGroup {
    pub best: u32,
    /// Sorted method ids, including `best`.
    pub methods: Vec<u32>,
    /// Mean of the best method over the datasets where it is defined.
    pub representative: f64,
    /// p-value of each non-best member against the best, keyed like `methods`.
    pub p_values: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankGroups {
    pub metric: Metric,
    pub alpha: f64,
    pub groups: Vec<RankGroup>,
}

/// Per-method vectors of dataset means, `None` where undefined.
#[derive(Debug, Clone)]
pub struct MethodTable {
    pub methods: Vec<u32>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl MethodTable {
    pub fn from_grid(grid: &ExperimentGrid, metric: Metric, datasets: &[String], methods: &[u32]) -> Self {
        MethodTable {
            methods: methods.to_vec(),
            values: methods
                .iter()
                .map(|&m| datasets.iter().map(|d| grid.value(d, m, metric)).collect())
                .collect(),
        }
    }

    fn mean(&self, idx: usize) -> Option<f64> {
        let v: Vec<f64> = self.values[idx].iter().flatten().copied().collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Paired test on the datasets where both methods are defined; fewer than
    /// two shared datasets give p = 1.
    fn p_value(&self, a: usize, b: usize) -> Result<f64> {
        let (x, y): (Vec<f64>, Vec<f64>) = self.values[a]
            .iter()
            .zip(&self.values[b])
            .filter_map(|(p, q)| Some(((*p)?, (*q)?)))
            .unzip();
        if x.len() < 2 {
            return Ok(1.0);
        }
        Ok(paired_t_test(&x, &y)?.p)
    }
}

/// Repeatedly takes the best remaining method and groups it with the methods
/// the step-up procedure cannot separate from it.
pub fn equivalence_groups_table(table: &MethodTable, metric: Metric, alpha: f64) -> Result<RankGroups> {
    if table.methods.len() < 2 {
        return Err(Error::invalid("grouping needs at least 2 methods"));
    }
    let lower = metric.lower_is_better();
    let means: Vec<Option<f64>> = (0..table.methods.len()).map(|i| table.mean(i)).collect();
    let mut remaining: Vec<usize> = (0..table.methods.len()).collect();
    let mut groups = Vec::new();
    while !remaining.is_empty() {
        let best = *remaining
            .iter()
            .min_by(|&&a, &&b| {
                let key = |i: usize| match means[i] {
                    Some(v) if lower => v,
                    Some(v) => -v,
                    None => f64::INFINITY,
                };
                key(a)
                    .total_cmp(&key(b))
                    .then(table.methods[a].cmp(&table.methods[b]))
            })
            .expect("nonempty");
        let others: Vec<usize> = remaining.iter().copied().filter(|&i| i != best).collect();
        let p: Vec<f64> = others
            .iter()
            .map(|&o| table.p_value(best, o))
            .collect::<Result<_>>()?;
        let joined = lsu_select(&p, alpha);
        let mut members = vec![best];
        let mut p_values = Vec::new();
        for ((&o, &j), &pv) in others.iter().zip(&joined).zip(&p) {
            if j {
                members.push(o);
                p_values.push((table.methods[o], pv));
            }
        }
        remaining.retain(|i| !members.contains(i));
        let mut ids: Vec<u32> = members.iter().map(|&i| table.methods[i]).collect();
        ids.sort_unstable();
        p_values.sort_by_key(|&(id, _)| id);
        groups.push(RankGroup {
            best: table.methods[best],
            methods: ids,
            representative: means[best].unwrap_or(f64::NAN),
            p_values,
        });
    }
    Ok(RankGroups { metric, alpha, groups })
}

pub fn equivalence_groups(
    grid: &ExperimentGrid,
    metric: Metric,
    datasets: &[String],
    methods: &[u32],
    alpha: f64,
) -> Result<RankGroups> {
    equivalence_groups_table(&MethodTable::from_grid(grid, metric, datasets, methods), metric, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: Vec<Vec<f64>>) -> MethodTable {
        MethodTable {
            methods: (1..=rows.len() as u32).collect(),
            values: rows.into_iter().map(|r| r.into_iter().map(Some).collect()).collect(),
        }
    }

    #[test]
    fn dominant_method_alone() {
        let base: Vec<f64> = (0..10).map(|i| 0.5 + 0.01 * ((i * 7) % 10) as f64).collect();
        let a: Vec<f64> = base.iter().enumerate().map(|(i, v)| v + 0.3 + 0.001 * (i % 3) as f64).collect();
        let c: Vec<f64> = base.iter().enumerate().map(|(i, v)| v + if i % 2 == 0 { 0.002 } else { -0.002 }).collect();
        let g = equivalence_groups_table(&table(vec![base, a, c]), Metric::Auc, 0.05).unwrap();
        let sets: Vec<Vec<u32>> = g.groups.iter().map(|g| g.methods.clone()).collect();
        assert_eq!(sets, vec![vec![2], vec![1, 3]]);
    }

    #[test]
    fn identical_methods_single_group() {
        let v = vec![0.3, 0.4, 0.8, 0.1];
        let g = equivalence_groups_table(&table(vec![v.clone(), v.clone(), v]), Metric::Recall, 0.05).unwrap();
        assert_eq!(g.groups.len(), 1);
        assert_eq!(g.groups[0].methods, vec![1, 2, 3]);
        assert_eq!(g.groups[0].best, 1);
    }

    #[test]
    fn error_metrics_prefer_small() {
        let low = vec![0.1, 0.12, 0.09, 0.11];
        let high = vec![0.5, 0.52, 0.55, 0.49];
        let g = equivalence_groups_table(&table(vec![high.clone(), low.clone()]), Metric::AmError, 0.05).unwrap();
        assert_eq!(g.groups[0].best, 2);
        let g = equivalence_groups_table(&table(vec![high, low]), Metric::Auc, 0.05).unwrap();
        assert_eq!(g.groups[0].best, 1);
    }

    #[test]
    fn undefined_values_are_pairwise_excluded() {
        let t = MethodTable {
            methods: vec![1, 2],
            values: vec![vec![Some(0.9), Some(0.8), None, Some(0.85)], vec![Some(0.1), Some(0.2), Some(0.3), Some(0.15)]],
        };
        let g = equivalence_groups_table(&t, Metric::Precision, 0.05).unwrap();
        assert_eq!(g.groups.len(), 2);
        assert!((g.groups[0].representative - 0.85).abs() < 1e-12);
    }
}
