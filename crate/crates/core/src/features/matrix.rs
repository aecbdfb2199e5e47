use super::dense::DenseMatrix;
use super::unibigram::SparseVector;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseMatrix {
    dim: usize,
    rows: Vec<SparseVector>,
}

impl SparseMatrix {
    pub fn new(dim: usize, rows: Vec<SparseVector>) -> Self {
        debug_assert!(rows
            .iter()
            .all(|r| r.indices.last().is_none_or(|&i| (i as usize) < dim)));
        SparseMatrix { dim, rows }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }
}

/// Per-citation feature vectors, either sparse term counts or dense embeddings.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMatrix {
    Sparse(SparseMatrix),
    Dense(DenseMatrix),
}

impl From<SparseMatrix> for FeatureMatrix {
    fn from(m: SparseMatrix) -> Self {
        FeatureMatrix::Sparse(m)
    }
}

impl From<DenseMatrix> for FeatureMatrix {
    fn from(m: DenseMatrix) -> Self {
        FeatureMatrix::Dense(m)
    }
}

impl FeatureMatrix {
    pub fn n(&self) -> usize {
        match self {
            FeatureMatrix::Sparse(m) => m.rows.len(),
            FeatureMatrix::Dense(m) => m.rows(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FeatureMatrix::Sparse(m) => m.dim,
            FeatureMatrix::Dense(m) => m.cols(),
        }
    }

    #[inline]
    pub fn dot(&self, i: usize, w: &[f64]) -> f64 {
        match self {
            FeatureMatrix::Sparse(m) => m.rows[i].dot(w),
            FeatureMatrix::Dense(m) => m.row(i).iter().zip(w).map(|(a, b)| a * b).sum(),
        }
    }

    /// `w += scale * x_i`
    #[inline]
    pub fn add_scaled(&self, i: usize, scale: f64, w: &mut [f64]) {
        match self {
            FeatureMatrix::Sparse(m) => {
                for (j, v) in m.rows[i].iter() {
                    w[j] += scale * v;
                }
            }
            FeatureMatrix::Dense(m) => {
                for (wj, v) in w.iter_mut().zip(m.row(i)) {
                    *wj += scale * v;
                }
            }
        }
    }

    pub fn sq_norm(&self, i: usize) -> f64 {
        match self {
            FeatureMatrix::Sparse(m) => m.rows[i].sq_norm(),
            FeatureMatrix::Dense(m) => m.row(i).iter().map(|v| v * v).sum(),
        }
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        match self {
            FeatureMatrix::Sparse(m) => FeatureMatrix::Sparse(SparseMatrix {
                dim: m.dim,
                rows: indices.iter().map(|&i| m.rows[i].clone()).collect(),
            }),
            FeatureMatrix::Dense(m) => FeatureMatrix::Dense(m.select_rows(indices)),
        }
    }

    /// Rows of `self` followed by rows of `other`; `None` when kinds or dimensions differ.
    pub fn vstack(&self, other: &FeatureMatrix) -> Option<FeatureMatrix> {
        if self.dim() != other.dim() {
            return None;
        }
        match (self, other) {
            (FeatureMatrix::Sparse(a), FeatureMatrix::Sparse(b)) => {
                let mut rows = a.rows.clone();
                rows.extend(b.rows.iter().cloned());
                Some(FeatureMatrix::Sparse(SparseMatrix { dim: a.dim, rows }))
            }
            (FeatureMatrix::Dense(a), FeatureMatrix::Dense(b)) => {
                let mut data = a.data().to_vec();
                data.extend_from_slice(b.data());
                Some(FeatureMatrix::Dense(DenseMatrix::new(a.rows() + b.rows(), a.cols(), data)))
            }
            _ => None,
        }
    }

    pub fn scaled(&self, alpha: f64) -> FeatureMatrix {
        match self {
            FeatureMatrix::Sparse(m) => FeatureMatrix::Sparse(SparseMatrix {
                dim: m.dim,
                rows: m
                    .rows
                    .iter()
                    .map(|r| SparseVector {
                        indices: r.indices.clone(),
                        values: r.values.iter().map(|v| v * alpha).collect(),
                    })
                    .collect(),
            }),
            FeatureMatrix::Dense(m) => FeatureMatrix::Dense(m.map(|v| v * alpha)),
        }
    }
}
