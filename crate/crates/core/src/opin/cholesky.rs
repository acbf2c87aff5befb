use nalgebra::{DMatrix, DVector};

use crate::cov::CovMatrix;
use crate::error::{Error, Result};
use crate::linalg;

/// `L Σ Lᵀ = D` for `Σ` reordered by `ordering`, with `L` unit lower
/// triangular and `D` positive diagonal. Row `j` of `L` holds the negated
/// coefficients of the regression of variable `j` on its predecessors.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactors {
    pub ordering: Vec<usize>,
    pub l: DMatrix<f64>,
    pub d: DVector<f64>,
}

impl CholeskyFactors {
    /// `L⁻¹ D L⁻ᵀ` in the factor ordering.
    pub fn recompose(&self) -> DMatrix<f64> {
        let m = linalg::unit_lower_inverse(&self.l);
        let md = &m * DMatrix::from_diagonal(&self.d);
        let s = md * m.transpose();
        (&s + s.transpose()) * 0.5
    }

    /// [`CholeskyFactors::recompose`] as a covariance matrix over `labels`.
    pub(crate) fn recompose_as(&self, labels: &[usize]) -> Result<CovMatrix> {
        let s = self.recompose();
        let pos: Vec<usize> = labels
            .iter()
            .map(|l| self.ordering.iter().position(|o| o == l).ok_or(Error::MissingVariable { label: *l }))
            .collect::<Result<_>>()?;
        let q = labels.len();
        CovMatrix::new(labels.to_vec(), DMatrix::from_fn(q, q, |r, c| s[(pos[r], pos[c])]))
    }
}

/// Generalized Cholesky factorization of `cov` under `ordering`, a
/// permutation of its labels.
pub fn generalized_cholesky(cov: &CovMatrix, ordering: &[usize]) -> Result<CholeskyFactors> {
    if ordering.len() != cov.dim() {
        return Err(Error::InvalidArgument(format!(
            "ordering has {} labels, matrix has {}",
            ordering.len(),
            cov.dim()
        )));
    }
    let reordered = cov.submatrix(ordering)?;
    let (m, d) = linalg::ldl(reordered.values())
        .map_err(|f| Error::NotPositiveDefinite { label: ordering[f.index], pivot: f.pivot })?;
    Ok(CholeskyFactors { ordering: ordering.to_vec(), l: linalg::unit_lower_inverse(&m), d })
}
