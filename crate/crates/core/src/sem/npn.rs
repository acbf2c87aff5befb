use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{sample, true_covariance, LinearSem};
use crate::cov::CovMatrix;
use crate::error::{Error, Result};

/// A strictly increasing map applied to one coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transform {
    Identity,
    Cubic,
    Exp,
    /// Standard logistic CDF.
    Logistic,
    /// Continuous, through the origin, slope `slopes[0]` left of `breaks[0]`
    /// and `slopes[k]` between `breaks[k-1]` and `breaks[k]`.
    PiecewiseLinear { breaks: Vec<f64>, slopes: Vec<f64> },
}

impl Transform {
    fn validate(&self) -> Result<()> {
        if let Transform::PiecewiseLinear { breaks, slopes } = self {
            if slopes.len() != breaks.len() + 1 {
                return Err(Error::InvalidArgument("piecewise-linear transform needs one more slope than breaks".into()));
            }
            if breaks.windows(2).any(|w| !(w[0] < w[1])) || breaks.iter().any(|b| !b.is_finite()) {
                return Err(Error::InvalidArgument("piecewise-linear breaks must be finite and increasing".into()));
            }
            if slopes.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                return Err(Error::InvalidArgument("piecewise-linear slopes must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Transform::Identity => x,
            Transform::Cubic => x * x * x,
            Transform::Exp => x.exp(),
            Transform::Logistic => 1.0 / (1.0 + (-x).exp()),
            Transform::PiecewiseLinear { breaks, slopes } => {
                let mut y = slopes[0] * x;
                for (k, &b) in breaks.iter().enumerate() {
                    y += (slopes[k + 1] - slopes[k]) * (x - b).max(0.0);
                }
                y
            }
        }
    }

    /// Inverse of [`Transform::apply`] on its range.
    pub fn invert(&self, y: f64) -> f64 {
        match self {
            Transform::Identity => y,
            Transform::Cubic => y.cbrt(),
            Transform::Exp => y.ln(),
            Transform::Logistic => (y / (1.0 - y)).ln(),
            Transform::PiecewiseLinear { breaks, slopes } => {
                // walk segments left to right, tracking the value at each break
                let mut seg = 0;
                while seg < breaks.len() && self.apply(breaks[seg]) < y {
                    seg += 1;
                }
                let (x0, y0) = if seg == 0 { (0.0, 0.0) } else { (breaks[seg - 1], self.apply(breaks[seg - 1])) };
                x0 + (y - y0) / slopes[seg]
            }
        }
    }
}

/// Nonparanormal model: `X_j = g_j(Z_j)` with `Z` drawn from a linear SEM
/// whose covariance has unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct NpnModel {
    base: LinearSem,
    transforms: Vec<Transform>,
}

impl NpnModel {
    pub fn new(base: LinearSem, transforms: Vec<Transform>) -> Result<Self> {
        if transforms.len() != base.num_nodes() {
            return Err(Error::InvalidArgument(format!(
                "{} transforms for {} nodes",
                transforms.len(),
                base.num_nodes()
            )));
        }
        for t in &transforms {
            t.validate()?;
        }
        let s = true_covariance(&base);
        if let Some(i) = (0..s.dim()).find(|&i| (s.values()[(i, i)] - 1.0).abs() > 1e-9) {
            return Err(Error::InvalidArgument(format!(
                "latent variance of node {} is {}, expected 1",
                i + 1,
                s.values()[(i, i)]
            )));
        }
        Ok(Self { base, transforms })
    }

    /// Standardizes `sem` first so any SEM can serve as the latent model.
    pub fn from_sem(sem: &LinearSem, transforms: Vec<Transform>) -> Result<Self> {
        Self::new(sem.standardized(), transforms)
    }

    pub fn base(&self) -> &LinearSem {
        &self.base
    }

    pub fn transforms(&self) -> &[Transform] {
        &self.transforms
    }

    /// `Σ₀`, the latent correlation matrix.
    pub fn latent_correlation(&self) -> CovMatrix {
        true_covariance(&self.base)
    }
}

/// Draws `Z` from the base SEM and returns `g(Z)` coordinatewise.
pub fn npn_sample(m: &NpnModel, n: usize, seed: u64) -> DMatrix<f64> {
    let mut x = sample(&m.base, n, seed);
    for (j, t) in m.transforms.iter().enumerate() {
        x.column_mut(j).apply(|v| *v = t.apply(*v));
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    fn menu() -> Vec<Transform> {
        vec![
            Transform::Identity,
            Transform::Cubic,
            Transform::Exp,
            Transform::Logistic,
            Transform::PiecewiseLinear { breaks: vec![-1.0, 0.5, 2.0], slopes: vec![0.5, 2.0, 1.0, 3.0] },
        ]
    }

    #[test]
    fn transforms_are_increasing_and_invertible() {
        for t in menu() {
            let mut prev = f64::NEG_INFINITY;
            for k in -40..=40 {
                let x = k as f64 / 10.0;
                let y = t.apply(x);
                assert!(y > prev, "{t:?} not increasing at {x}");
                prev = y;
                assert_abs_diff_eq!(t.invert(y), x, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn bad_piecewise_is_rejected() {
        let sem = LinearSem::gaussian(crate::graph::WeightedDag::new(1, &[]).unwrap());
        let bad = Transform::PiecewiseLinear { breaks: vec![0.0], slopes: vec![1.0, -1.0] };
        assert!(NpnModel::new(sem, vec![bad]).is_err());
    }

    #[test]
    fn identity_transforms_reproduce_gaussian_sample() {
        let base = fixtures::six_node_sem().standardized();
        let m = NpnModel::new(base.clone(), vec![Transform::Identity; 6]).unwrap();
        assert_eq!(npn_sample(&m, 100, 5), sample(&base, 100, 5));
    }

    #[test]
    fn unstandardized_base_is_rejected() {
        assert!(NpnModel::new(fixtures::six_node_sem(), vec![Transform::Identity; 6]).is_err());
        assert!(NpnModel::from_sem(&fixtures::six_node_sem(), vec![Transform::Identity; 6]).is_ok());
    }
}
