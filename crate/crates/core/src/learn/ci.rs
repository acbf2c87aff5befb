use std::collections::BTreeSet;

use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::cov::CovMatrix;
use crate::error::{Error, Result};

/// Partial correlation of `i` and `j` given `s`, from the inverse of the
/// covariance block over `(min(i,j), max(i,j), s…)`.
pub fn partial_correlation(cov: &CovMatrix, i: usize, j: usize, s: &BTreeSet<usize>) -> Result<f64> {
    if i == j {
        return Err(Error::InvalidArgument(format!("partial correlation of {i} with itself")));
    }
    if s.contains(&i) || s.contains(&j) {
        return Err(Error::InvalidArgument(format!("conditioning set {s:?} contains {i} or {j}")));
    }
    let mut labels = vec![i.min(j), i.max(j)];
    labels.extend(s.iter().copied());
    let idx = labels.iter().map(|&l| cov.index_of(l)).collect::<Result<Vec<_>>>()?;
    let q = idx.len();
    let block = DMatrix::from_fn(q, q, |r, c| cov.values()[(idx[r], idx[c])]);
    let precision = block
        .cholesky()
        .ok_or_else(|| Error::Singular { labels: labels.clone() })?
        .inverse();
    let r = -precision[(0, 1)] / (precision[(0, 0)] * precision[(1, 1)]).sqrt();
    Ok(r.clamp(-1.0, 1.0))
}

/// Fisher-z test of `i ⟂ j | s`; `true` means independence is accepted.
///
/// Accepts iff `√(n − |s| − 3) · |atanh ρ̂| ≤ Φ⁻¹(1 − α/2)`.
pub fn fisher_z_ci(cov: &CovMatrix, n: usize, i: usize, j: usize, s: &BTreeSet<usize>, alpha: f64) -> Result<bool> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if s.len() + 4 > n {
        return Err(Error::InvalidArgument(format!(
            "conditioning on {} variables needs more than {n} observations",
            s.len()
        )));
    }
    let r = partial_correlation(cov, i, j, s)?;
    let stat = ((n - s.len() - 3) as f64).sqrt() * r.atanh().abs();
    Ok(stat <= z_quantile(alpha))
}

pub(crate) fn z_quantile(alpha: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(1.0 - alpha / 2.0)
}
