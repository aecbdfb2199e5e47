use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    Raw,
    Row,
    Col,
}

/// Row-major `rows x cols` matrix of citation vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    normalization: Normalization,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must be rows * cols");
        DenseMatrix {
            rows,
            cols,
            data,
            normalization: Normalization::Raw,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let data: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        DenseMatrix::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn select_rows(&self, indices: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        DenseMatrix {
            rows: indices.len(),
            cols: self.cols,
            data,
            normalization: self.normalization,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        DenseMatrix {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }
}

/// Rounds to two decimals; never yields negative zero.
pub fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0 + 0.0
}

fn zscore(values: &mut [f64]) {
    let n = values.len() as f64;
    if values.is_empty() {
        return;
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std <= 1e-12 * mean.abs().max(1.0) {
        values.iter_mut().for_each(|v| *v = 0.0);
    } else {
        values.iter_mut().for_each(|v| *v = (*v - mean) / std);
    }
}

/// Z-normalizes every row (`Row`) or column (`Col`) with the population
/// standard deviation, then rounds to two decimals. Constant rows/columns become 0.
pub fn normalize(matrix: &DenseMatrix, mode: Normalization) -> DenseMatrix {
    let mut out = matrix.clone();
    match mode {
        Normalization::Raw => return out,
        Normalization::Row => {
            for i in 0..out.rows {
                zscore(&mut out.data[i * out.cols..(i + 1) * out.cols]);
            }
        }
        Normalization::Col => {
            let mut col = vec![0.0; out.rows];
            for j in 0..out.cols {
                for (i, c) in col.iter_mut().enumerate() {
                    *c = out.data[i * out.cols + j];
                }
                zscore(&mut col);
                for (i, c) in col.iter().enumerate() {
                    out.data[i * out.cols + j] = *c;
                }
            }
        }
    }
    out.data.iter_mut().for_each(|v| *v = round2(*v));
    out.normalization = mode;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_normalization_of_pair() {
        let m = normalize(&DenseMatrix::from_rows(&[vec![1.0, 3.0]]), Normalization::Row);
        assert_eq!(m.row(0), &[-1.0, 1.0]);
        assert_eq!(m.normalization(), Normalization::Row);
    }

    #[test]
    fn constant_column_is_zero() {
        let m = DenseMatrix::from_rows(&[vec![5.0, 1.0], vec![5.0, 2.0], vec![5.0, 3.0]]);
        let c = normalize(&m, Normalization::Col);
        assert_eq!((0..3).map(|i| c.get(i, 0)).collect::<Vec<_>>(), vec![0.0, 0.0, 0.0]);
        assert_eq!(c.get(0, 1), -1.22);
        let zero_row = normalize(&DenseMatrix::from_rows(&[vec![0.0; 4]]), Normalization::Row);
        assert!(zero_row.data().iter().all(|&v| v == 0.0 && v.is_sign_positive()));
    }

    #[test]
    fn two_decimal_rounding() {
        assert_eq!(round2(0.6666), 0.67);
        assert_eq!(round2(-0.001), 0.0);
        assert!(round2(-0.001).is_sign_positive());
    }

    proptest::proptest! {
        #[test]
        fn row_normalized_moments(rows in proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, 8..64), 1..6)) {
            let d = rows[0].len();
            let rows: Vec<Vec<f64>> = rows.into_iter().map(|mut r| { r.resize(d, 0.5); r }).collect();
            let m = normalize(&DenseMatrix::from_rows(&rows), Normalization::Row);
            for i in 0..m.rows() {
                let r = m.row(i);
                let mean = r.iter().sum::<f64>() / d as f64;
                let std = (r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d as f64).sqrt();
                if r.iter().any(|&v| v != 0.0) {
                    proptest::prop_assert!(mean.abs() < 0.01);
                    proptest::prop_assert!((std - 1.0).abs() < 0.02);
                }
                for &v in r {
                    proptest::prop_assert!(((v * 100.0).round() - v * 100.0).abs() < 1e-9);
                }
            }
        }
    }
}
