use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub df: usize,
    /// Set when the differences have zero variance and a nonzero mean (p reported as 0).
    pub degenerate: bool,
}

/// Paired t-test on `a − b`.
///
/// All-zero differences give `t = 0, p = 1`; constant nonzero differences give
/// `t = ±∞, p = 0` with `degenerate` set.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::invalid("paired t-test needs at least 2 pairs"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let df = n - 1;
    if var == 0.0 {
        return Ok(if mean == 0.0 {
            TTest { t: 0.0, p: 1.0, df, degenerate: false }
        } else {
            TTest {
                t: mean.signum() * f64::INFINITY,
                p: 0.0,
                df,
                degenerate: true,
            }
        });
    }
    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TTest { t, p, df, degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_samples() {
        let a = [0.1, 0.5, 0.3];
        let r = paired_t_test(&a, &a).unwrap();
        assert_eq!((r.t, r.p), (0.0, 1.0));
    }

    #[test]
    fn constant_shift_is_degenerate() {
        let r = paired_t_test(&[2.0, 3.0, 4.0, 5.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p, 0.0);
        assert!(r.t.is_infinite() && r.t > 0.0);
    }

    #[test]
    fn five_pair_textbook_case() {
        // d = (1, 2, 3, 4, 6): mean 3.2, sd √3.7.
        let a = [11.0, 12.0, 13.0, 14.0, 16.0];
        let b = [10.0; 5];
        let r = paired_t_test(&a, &b).unwrap();
        let t = 3.2 / (3.7f64.sqrt() / 5f64.sqrt());
        assert!((r.t - t).abs() < 1e-9);
        assert_eq!(r.df, 4);
        // Closed-form CDF of Student's t with 4 degrees of freedom.
        let x = t;
        let cdf = 0.5 + x * (6.0 + x * x) / (2.0 * (4.0 + x * x).powf(1.5));
        assert!((r.p - 2.0 * (1.0 - cdf)).abs() < 1e-9);
    }

    #[test]
    fn antisymmetric() {
        let a = [0.3, 0.9, 0.2, 0.4];
        let b = [0.1, 0.5, 0.3, 0.2];
        let x = paired_t_test(&a, &b).unwrap();
        let y = paired_t_test(&b, &a).unwrap();
        assert_eq!(x.t, -y.t);
        assert!((x.p - y.p).abs() < 1e-15);
    }

    #[test]
    fn too_short() {
        assert!(paired_t_test(&[1.0], &[2.0]).is_err());
        assert!(paired_t_test(&[1.0, 2.0], &[2.0]).is_err());
    }
}
