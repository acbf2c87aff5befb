//! Labelled covariance matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;

/// Relative tolerance used when checking symmetry on construction.
const SYMMETRY_TOL: f64 = 1e-12;

/// A symmetric covariance (or correlation) matrix whose rows and columns are
/// labelled by 1-based node indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    labels: Vec<usize>,
    values: DMatrix<f64>,
}

impl CovMatrix {
    /// Builds a labelled matrix. The input must be square, symmetric to within
    /// `1e-12` relative, and the labels distinct. The stored matrix is the
    /// exact symmetrization of the input.
    pub fn new(labels: Vec<usize>, values: DMatrix<f64>) -> Result<Self> {
        let q = labels.len();
        if values.nrows() != q || values.ncols() != q {
            return Err(Error::InvalidArgument(format!(
                "{} labels for a {}x{} matrix",
                q,
                values.nrows(),
                values.ncols()
            )));
        }
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!("duplicate labels in {labels:?}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite matrix entry".into()));
        }
        let scale = values.amax().max(f64::MIN_POSITIVE);
        for i in 0..q {
            for j in (i + 1)..q {
                if (values[(i, j)] - values[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::InvalidArgument(format!(
                        "matrix is not symmetric at ({}, {})",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        let values = (&values + values.transpose()) * 0.5;
        Ok(Self { labels, values })
    }

    /// Labels `1..=q` in natural order.
    pub fn from_matrix(values: DMatrix<f64>) -> Result<Self> {
        let labels = (1..=values.nrows()).collect();
        Self::new(labels, values)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn contains(&self, label: usize) -> bool {
        self.labels.contains(&label)
    }

    pub fn index_of(&self, label: usize) -> Result<usize> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .ok_or(Error::MissingVariable { label })
    }

    /// Entry for the pair of labels `(a, b)`.
    pub fn get(&self, a: usize, b: usize) -> Result<f64> {
        Ok(self.values[(self.index_of(a)?, self.index_of(b)?)])
    }

    /// The sub-matrix over `labels`, in the order given.
    pub fn submatrix(&self, labels: &[usize]) -> Result<CovMatrix> {
        let idx = labels
            .iter()
            .map(|&l| self.index_of(l))
            .collect::<Result<Vec<_>>>()?;
        let q = idx.len();
        let values = DMatrix::from_fn(q, q, |r, c| self.values[(idx[r], idx[c])]);
        CovMatrix::new(labels.to_vec(), values)
    }

    /// Rescales to unit diagonal.
    pub fn to_correlation(&self) -> Result<CovMatrix> {
        let q = self.dim();
        let mut sd = Vec::with_capacity(q);
        for i in 0..q {
            let v = self.values[(i, i)];
            if !(v > 0.0) {
                return Err(Error::ZeroVariance { column: self.labels[i] });
            }
            sd.push(v.sqrt());
        }
        let values = DMatrix::from_fn(q, q, |r, c| {
            if r == c {
                1.0
            } else {
                self.values[(r, c)] / (sd[r] * sd[c])
            }
        });
        CovMatrix::new(self.labels.clone(), values)
    }

    /// Whether every pivot of an `LDLᵀ` factorization clears the rank tolerance.
    pub fn is_positive_definite(&self) -> bool {
        linalg::ldl(&self.values).is_ok()
    }

    /// Largest absolute entrywise difference to `other`, matched by label.
    pub fn max_abs_diff(&self, other: &CovMatrix) -> Result<f64> {
        let mut worst = 0.0_f64;
        for &a in &self.labels {
            for &b in &self.labels {
                worst = worst.max((self.get(a, b)? - other.get(a, b)?).abs());
            }
        }
        Ok(worst)
    }
}
