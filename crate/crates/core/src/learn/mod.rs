//! Estimating correlation structure and the CPDAG from data.
//!
//! Data matrices are `n × p` with column `c` holding node `c + 1`.

mod ci;
mod pc;
mod rank;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cov::CovMatrix;
use crate::error::{Error, Result};

pub use ci::{fisher_z_ci, partial_correlation};
pub use pc::{pc_cpdag, pc_cpdag_with_sepsets, PcOutput};
pub use rank::{nearest_correlation, rank_correlation_matrix, RankCorrelation, RankKind, DEFAULT_TIE_FRACTION};

/// Significance level used when none is given.
pub const DEFAULT_ALPHA: f64 = 0.01;

/// Conditional-independence test settings for [`pc_cpdag`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiTestConfig {
    pub alpha: f64,
    /// Largest conditioning set tried; `None` means `p − 2`.
    pub max_condition_size: Option<usize>,
}

impl CiTestConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(Self { alpha, max_condition_size: None })
    }

    pub fn with_max_condition_size(mut self, m: usize) -> Self {
        self.max_condition_size = Some(m);
        self
    }
}

impl Default for CiTestConfig {
    fn default() -> Self {
        Self { alpha: DEFAULT_ALPHA, max_condition_size: None }
    }
}

/// Unbiased sample covariance (denominator `n − 1`).
pub fn sample_covariance(data: &DMatrix<f64>) -> Result<CovMatrix> {
    let (n, p) = data.shape();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 rows, got {n}")));
    }
    let mut centered = data.clone();
    for c in 0..p {
        let mean = centered.column(c).mean();
        centered.column_mut(c).add_scalar_mut(-mean);
    }
    let s = centered.transpose() * &centered / (n as f64 - 1.0);
    if let Some(c) = (0..p).find(|&c| !(s[(c, c)] > 0.0)) {
        return Err(Error::ZeroVariance { column: c + 1 });
    }
    CovMatrix::from_matrix(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_covariance_by_hand() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 2.0, 2.0]);
        let s = sample_covariance(&x).unwrap();
        assert_eq!(s.values(), &DMatrix::from_element(2, 2, 2.0));
    }

    #[test]
    fn identical_columns_share_variance() {
        let x = DMatrix::from_fn(10, 2, |r, _| (r * r) as f64);
        let s = sample_covariance(&x).unwrap();
        assert_eq!(s.values()[(0, 1)], s.values()[(0, 0)]);
    }

    #[test]
    fn constant_column_is_rejected() {
        let x = DMatrix::from_fn(5, 2, |r, c| if c == 1 { 3.0 } else { r as f64 });
        assert!(matches!(sample_covariance(&x), Err(Error::ZeroVariance { column: 2 })));
    }

    #[test]
    fn alpha_must_be_a_probability() {
        assert!(CiTestConfig::new(0.0).is_err());
        assert!(CiTestConfig::new(1.0).is_err());
        assert_eq!(CiTestConfig::new(0.05).unwrap().alpha, 0.05);
    }
}
