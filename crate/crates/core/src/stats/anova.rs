use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};
use crate::metrics::Metric;

use super::grid::ExperimentGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorTest {
    pub f: f64,
    pub p: f64,
    pub df: usize,
}

/// Additive `METRIC ~ DATA + METHOD` fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anova {
    pub method: FactorTest,
    pub data: FactorTest,
    pub residual_df: usize,
    pub rss: f64,
    /// Datasets dropped because some method's value was undefined.
    pub dropped_datasets: Vec<String>,
}

fn design(d: usize, m: usize, with_data: bool, with_method: bool) -> DMatrix<f64> {
    let cols = 1 + if with_data { d - 1 } else { 0 } + if with_method { m - 1 } else { 0 };
    DMatrix::from_fn(d * m, cols, |row, col| {
        let (di, mi) = (row / m, row % m);
        if col == 0 {
            return 1.0;
        }
        let mut c = col - 1;
        if with_data {
            if c < d - 1 {
                return if di == c + 1 { 1.0 } else { 0.0 };
            }
            c -= d - 1;
        }
        if mi == c + 1 {
            1.0
        } else {
            0.0
        }
    })
}

fn rss(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    let beta = x
        .clone()
        .svd(true, true)
        .solve(y, 1e-12)
        .map_err(|e| Error::invalid(format!("least squares failed: {e}")))?;
    let resid = y - x * beta;
    Ok((resid.norm_squared(), resid))
}

/// Sums of squares below `1e-12·tss` are treated as exact zeros.
fn f_test(extra: f64, df_num: usize, rss_full: f64, df_den: usize, tss: f64) -> FactorTest {
    let tiny = 1e-12 * tss;
    let extra = if extra <= tiny { 0.0 } else { extra };
    let rss_full = if rss_full <= tiny { 0.0 } else { rss_full };
    let (f, p) = if rss_full == 0.0 {
        if extra == 0.0 {
            (f64::NAN, 1.0)
        } else {
            (f64::INFINITY, 0.0)
        }
    } else {
        let f = (extra / df_num as f64) / (rss_full / df_den as f64);
        let dist = FisherSnedecor::new(df_num as f64, df_den as f64).expect("positive df");
        (f, dist.sf(f))
    };
    FactorTest { f, p, df: df_num }
}

/// Two-factor ANOVA without interaction on a complete `datasets × methods` table.
pub fn anova_table(values: &[Vec<f64>]) -> Result<(Anova, DVector<f64>)> {
    let d = values.len();
    let m = values.first().map_or(0, Vec::len);
    if d < 2 || m < 2 {
        return Err(Error::invalid("two-factor ANOVA needs at least 2 datasets and 2 methods"));
    }
    if values.iter().any(|r| r.len() != m) {
        return Err(Error::invalid("ragged ANOVA table"));
    }
    let y = DVector::from_iterator(d * m, values.iter().flatten().copied());
    let (rss_full, resid) = rss(&design(d, m, true, true), &y)?;
    let (rss_no_method, _) = rss(&design(d, m, true, false), &y)?;
    let (rss_no_data, _) = rss(&design(d, m, false, true), &y)?;
    let df_resid = (d - 1) * (m - 1);
    let mean = y.mean();
    let tss = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    Ok((
        Anova {
            method: f_test(rss_no_method - rss_full, m - 1, rss_full, df_resid, tss),
            data: f_test(rss_no_data - rss_full, d - 1, rss_full, df_resid, tss),
            residual_df: df_resid,
            rss: rss_full,
            dropped_datasets: Vec::new(),
        },
        resid,
    ))
}

/// ANOVA over the given datasets and methods; datasets lacking a value for any method are dropped.
pub fn anova_two_factor(
    grid: &ExperimentGrid,
    metric: Metric,
    datasets: &[String],
    methods: &[u32],
) -> Result<Anova> {
    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    for ds in datasets {
        let row: Option<Vec<f64>> = methods.iter().map(|&m| grid.value(ds, m, metric)).collect();
        match row {
            Some(r) => rows.push(r),
            None => dropped.push(ds.clone()),
        }
    }
    let (mut a, _) = anova_table(&rows)?;
    a.dropped_datasets = dropped;
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Textbook two-way ANOVA without replication.
    fn closed_form(v: &[Vec<f64>]) -> (f64, f64) {
        let d = v.len() as f64;
        let m = v[0].len() as f64;
        let grand = v.iter().flatten().sum::<f64>() / (d * m);
        let row: Vec<f64> = v.iter().map(|r| r.iter().sum::<f64>() / m).collect();
        let col: Vec<f64> = (0..v[0].len()).map(|j| v.iter().map(|r| r[j]).sum::<f64>() / d).collect();
        let ss_method = d * col.iter().map(|c| (c - grand).powi(2)).sum::<f64>();
        let ss_err: f64 = v
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().map(move |(j, x)| (i, j, *x)))
            .map(|(i, j, x)| (x - row[i] - col[j] + grand).powi(2))
            .sum();
        let f = (ss_method / (m - 1.0)) / (ss_err / ((d - 1.0) * (m - 1.0)));
        (f, ss_err)
    }

    fn table() -> Vec<Vec<f64>> {
        vec![
            vec![0.61, 0.70, 0.64],
            vec![0.52, 0.66, 0.51],
            vec![0.80, 0.91, 0.83],
            vec![0.44, 0.58, 0.49],
            vec![0.71, 0.79, 0.70],
        ]
    }

    #[test]
    fn matches_closed_form() {
        let v = table();
        let (a, _) = anova_table(&v).unwrap();
        let (f, ss_err) = closed_form(&v);
        assert!((a.method.f - f).abs() < 1e-8 * f);
        assert!((a.rss - ss_err).abs() < 1e-12);
        assert!(a.method.p < 0.05);
        assert_eq!(a.residual_df, 8);
    }

    #[test]
    fn duplicated_method_has_no_effect() {
        let v: Vec<Vec<f64>> = table().into_iter().map(|r| vec![r[0], r[0]]).collect();
        let (a, _) = anova_table(&v).unwrap();
        assert_eq!(a.method.p, 1.0);
    }

    #[test]
    fn constant_shift_is_significant() {
        let v: Vec<Vec<f64>> = table().into_iter().map(|r| vec![r[0], r[0] + 0.3]).collect();
        let (a, _) = anova_table(&v).unwrap();
        assert!(a.method.p < 0.05);
        let mut noisy = v.clone();
        for (i, r) in noisy.iter_mut().enumerate() {
            r[1] += 0.01 * (i as f64 - 2.0);
        }
        let (a, _) = anova_table(&noisy).unwrap();
        let (f, _) = closed_form(&noisy);
        assert!((a.method.f - f).abs() < 1e-8 * f);
        assert!(a.method.p < 0.05);
    }

    #[test]
    fn residuals_orthogonal_to_factors() {
        let v = table();
        let (_, resid) = anova_table(&v).unwrap();
        let x = design(v.len(), v[0].len(), true, true);
        let proj = x.transpose() * resid;
        assert!(proj.iter().all(|p| p.abs() < 1e-10));
    }

    #[test]
    fn degenerate_design() {
        assert!(anova_table(&[vec![1.0, 2.0]]).is_err());
        assert!(anova_table(&[vec![1.0], vec![2.0]]).is_err());
    }
}
