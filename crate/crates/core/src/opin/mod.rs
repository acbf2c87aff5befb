//! Joint-effect estimators that need only the parent sets of the
//! intervention nodes.
//!
//! Every estimator consumes a [`CovMatrix`]: pass the true covariance for
//! oracle values, a sample covariance for estimates.

mod asymptotic;
mod cholesky;
mod mcd;
mod rrc;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::cov::CovMatrix;
use crate::error::{Error, Result};
use crate::linalg;

pub use asymptotic::{asymptotic_variance, gaussian_gamma, limit_covariance, vech_gamma, AsymptoticVariance};
pub use cholesky::{generalized_cholesky, CholeskyFactors};
pub use mcd::{mcd_effect, mcd_sigma_k, mechanism_change_covariance};
pub use rrc::rrc_effect;

/// Which estimator turns a parent assignment into an effect vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Recursive regressions.
    Rrc,
    /// Modified Cholesky decompositions.
    Mcd,
}

impl Method {
    pub fn effect(self, cov: &CovMatrix, pa: &ParentAssignment, response: usize) -> Result<EffectVector> {
        match self {
            Method::Rrc => rrc_effect(cov, pa, response),
            Method::Mcd => mcd_effect(cov, pa, response),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Rrc => "rrc",
            Method::Mcd => "mcd",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rrc" => Ok(Method::Rrc),
            "mcd" => Ok(Method::Mcd),
            _ => Err(Error::InvalidArgument(format!("unknown method `{s}` (expected rrc or mcd)"))),
        }
    }
}

/// Intervention targets in a fixed order, each with one parent set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParentAssignment {
    targets: Vec<usize>,
    parent_sets: Vec<BTreeSet<usize>>,
}

impl ParentAssignment {
    pub fn new(targets: Vec<usize>, parent_sets: Vec<BTreeSet<usize>>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::InvalidArgument("no intervention targets".into()));
        }
        if targets.len() != parent_sets.len() {
            return Err(Error::InvalidArgument(format!(
                "{} targets but {} parent sets",
                targets.len(),
                parent_sets.len()
            )));
        }
        for (k, (&t, pa)) in targets.iter().zip(&parent_sets).enumerate() {
            if t == 0 || pa.contains(&0) {
                return Err(Error::InvalidArgument("node labels start at 1".into()));
            }
            if targets[..k].contains(&t) {
                return Err(Error::InvalidArgument(format!("target {t} listed twice")));
            }
            if pa.contains(&t) {
                return Err(Error::InvalidArgument(format!("target {t} is in its own parent set")));
            }
        }
        Ok(Self { targets, parent_sets })
    }

    pub fn single(target: usize, parents: BTreeSet<usize>) -> Result<Self> {
        Self::new(vec![target], vec![parents])
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn parent_sets(&self) -> &[BTreeSet<usize>] {
        &self.parent_sets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// The assignment for a single target, by position.
    pub fn restrict(&self, index: usize) -> ParentAssignment {
        ParentAssignment { targets: vec![self.targets[index]], parent_sets: vec![self.parent_sets[index].clone()] }
    }

    /// Targets, their parents and `extra`, sorted and deduplicated.
    pub fn variables(&self, extra: &[usize]) -> Vec<usize> {
        let mut u: BTreeSet<usize> = self.targets.iter().copied().collect();
        for pa in &self.parent_sets {
            u.extend(pa);
        }
        u.extend(extra);
        u.into_iter().collect()
    }

    /// Parent sets as sorted vectors, for serialization.
    pub fn parent_lists(&self) -> Vec<Vec<usize>> {
        self.parent_sets.iter().map(|s| s.iter().copied().collect()).collect()
    }
}

/// Total joint effect of `targets` on `response`, one value per target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectVector {
    pub targets: Vec<usize>,
    pub response: usize,
    pub values: Vec<f64>,
}

impl EffectVector {
    pub fn new(targets: Vec<usize>, response: usize, values: Vec<f64>) -> Result<Self> {
        if targets.len() != values.len() {
            return Err(Error::InvalidArgument("effect vector length differs from target count".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite effect {v}")));
        }
        Ok(Self { targets, response, values })
    }
}

/// Serialized form of one estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectReport {
    pub targets: Vec<usize>,
    pub response: usize,
    pub method: Method,
    pub values: Vec<f64>,
    pub parent_sets: Vec<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub limit_covariance: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n: Option<usize>,
}

impl EffectReport {
    pub fn new(effect: &EffectVector, method: Method, pa: &ParentAssignment) -> Self {
        Self {
            targets: effect.targets.clone(),
            response: effect.response,
            method,
            values: effect.values.clone(),
            parent_sets: pa.parent_lists(),
            limit_covariance: None,
            n: None,
        }
    }

    pub fn with_variance(mut self, av: &AsymptoticVariance) -> Self {
        let c = &av.limit_covariance;
        self.limit_covariance = Some((0..c.nrows()).map(|r| c.row(r).iter().copied().collect()).collect());
        self.n = Some(av.n);
        self
    }
}

pub(crate) fn check_response(pa: &ParentAssignment, response: usize) -> Result<()> {
    if pa.targets.contains(&response) {
        return Err(Error::InvalidArgument(format!("response {response} is also a target")));
    }
    Ok(())
}

/// Coefficient of `X_i` in the regression of `X_p` on `{X_i} ∪ pa`, or zero
/// when `p ∈ pa`.
pub fn adjusted_effect(cov: &CovMatrix, i: usize, p: usize, pa: &BTreeSet<usize>) -> Result<f64> {
    if i == p {
        return Err(Error::InvalidArgument(format!("cause and response are both {i}")));
    }
    if pa.contains(&i) {
        return Err(Error::InvalidArgument(format!("{i} is in its own adjustment set")));
    }
    if pa.contains(&p) {
        return Ok(0.0);
    }
    let mut block = vec![i];
    block.extend(pa.iter().copied());
    let idx = block.iter().map(|&l| cov.index_of(l)).collect::<Result<Vec<_>>>()?;
    let ip = cov.index_of(p)?;
    let s = cov.values();
    let q = idx.len();
    let a = nalgebra::DMatrix::from_fn(q, q, |r, c| s[(idx[r], idx[c])]);
    let rhs = DVector::from_fn(q, |r, _| s[(idx[r], ip)]);
    let beta = linalg::solve_spd(&a, &rhs).map_err(|_| Error::Singular { labels: block })?;
    Ok(beta[0])
}
