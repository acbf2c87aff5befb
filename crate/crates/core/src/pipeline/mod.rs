//! End-to-end estimation: data → CPDAG → jointly valid parent sets → one
//! effect vector per parent tuple.

mod multiset;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cov::CovMatrix;
use crate::error::{Error, Result};
use crate::graph::{dag_to_cpdag, Pdag};
use crate::learn::{pc_cpdag, rank_correlation_matrix, sample_covariance, CiTestConfig, RankKind};
use crate::opin::{Method, ParentAssignment};
use crate::parentsets::{jointly_valid_parent_sets, ParentMultiset, DEFAULT_MAX_ENUM};
use crate::sem::{true_covariance, LinearSem};

pub use multiset::{multiset_distance, summarize, EffectEntry, EffectMultiset, Summary};

/// How the correlation structure is estimated from data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrKind {
    /// Sample covariance; effects on the scale of the data.
    #[default]
    Pearson,
    /// Sin-transformed Spearman; effects on the latent Gaussian scale.
    Spearman,
    /// Sin-transformed Kendall; effects on the latent Gaussian scale.
    Kendall,
}

impl fmt::Display for CorrKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorrKind::Pearson => "pearson",
            CorrKind::Spearman => "spearman",
            CorrKind::Kendall => "kendall",
        })
    }
}

impl FromStr for CorrKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pearson" => Ok(CorrKind::Pearson),
            "spearman" => Ok(CorrKind::Spearman),
            "kendall" => Ok(CorrKind::Kendall),
            _ => Err(Error::InvalidArgument(format!("unknown correlation `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointIdaConfig {
    pub method: Method,
    pub ci: CiTestConfig,
    pub corr_kind: CorrKind,
    pub max_enum: usize,
    /// Skip learning and use this CPDAG.
    pub known_cpdag: Option<Pdag>,
}

impl Default for JointIdaConfig {
    fn default() -> Self {
        Self {
            method: Method::Rrc,
            ci: CiTestConfig::default(),
            corr_kind: CorrKind::Pearson,
            max_enum: DEFAULT_MAX_ENUM,
            known_cpdag: None,
        }
    }
}

/// Everything produced by [`joint_ida`].
#[derive(Debug, Clone, PartialEq)]
pub struct JointIdaResult {
    pub multiset: EffectMultiset,
    pub parent_sets: ParentMultiset,
    pub cpdag: Pdag,
    pub cov: CovMatrix,
    pub n: usize,
    /// Whether the rank correlation matrix had to be made positive definite.
    pub clipped: bool,
}

/// Covariance estimate used by [`joint_ida`], with the clipping flag.
pub fn estimate_covariance(data: &DMatrix<f64>, kind: CorrKind) -> Result<(CovMatrix, bool)> {
    if let Some((r, c)) = (0..data.ncols())
        .flat_map(|c| (0..data.nrows()).map(move |r| (r, c)))
        .find(|&(r, c)| !data[(r, c)].is_finite())
    {
        return Err(Error::InvalidArgument(format!("non-finite value in row {}, column {}", r + 1, c + 1)));
    }
    match kind {
        CorrKind::Pearson => Ok((sample_covariance(data)?, false)),
        CorrKind::Spearman | CorrKind::Kendall => {
            let rk = if kind == CorrKind::Spearman { RankKind::Spearman } else { RankKind::Kendall };
            let rc = rank_correlation_matrix(data, rk)?;
            Ok((rc.matrix, rc.clipped))
        }
    }
}

fn check_query(p: usize, targets: &[usize], response: usize) -> Result<()> {
    if response == 0 || response > p {
        return Err(Error::NodeOutOfRange { node: response, p });
    }
    if targets.contains(&response) {
        return Err(Error::InvalidArgument(format!("response {response} is also a target")));
    }
    Ok(())
}

/// The joint-IDA estimator: learn (or take) a CPDAG, extract jointly valid
/// parent tuples, and estimate the joint effect under each.
pub fn joint_ida(data: &DMatrix<f64>, targets: &[usize], response: usize, cfg: &JointIdaConfig) -> Result<JointIdaResult> {
    let (n, p) = data.shape();
    check_query(p, targets, response)?;
    let (cov, clipped) = estimate_covariance(data, cfg.corr_kind)?;
    let cpdag = match &cfg.known_cpdag {
        Some(c) if c.num_nodes() != p => {
            return Err(Error::InvalidArgument(format!("graph has {} nodes, data has {p} columns", c.num_nodes())))
        }
        Some(c) => c.clone(),
        None => pc_cpdag(&cov, n, &cfg.ci)?,
    };
    let parent_sets = jointly_valid_parent_sets(&cpdag, targets, cfg.max_enum)?;
    let multiset = effects_from_parent_sets(&cov, &parent_sets, response, cfg.method)?;
    Ok(JointIdaResult { multiset, parent_sets, cpdag, cov, n, clipped })
}

/// One effect vector per distinct parent tuple, in tuple order.
pub fn effects_from_parent_sets(
    cov: &CovMatrix,
    parents: &ParentMultiset,
    response: usize,
    method: Method,
) -> Result<EffectMultiset> {
    let tuples: Vec<(ParentAssignment, u64)> = parents.assignments().collect();
    let entries = tuples
        .par_iter()
        .map(|(pa, m)| {
            let local = cov.submatrix(&pa.variables(&[response]))?;
            let e = method.effect(&local, pa, response)?;
            Ok(EffectEntry { values: e.values, multiplicity: *m, parent_sets: pa.parent_lists() })
        })
        .collect::<Result<Vec<_>>>()?;
    EffectMultiset::new(parents.targets().to_vec(), response, entries, parents.superset())
}

/// [`effects_from_parent_sets`] on the jointly valid tuples of `cpdag`.
pub fn effects_from_cpdag(
    cov: &CovMatrix,
    cpdag: &Pdag,
    targets: &[usize],
    response: usize,
    method: Method,
    max_enum: usize,
) -> Result<EffectMultiset> {
    check_query(cpdag.num_nodes(), targets, response)?;
    let parents = jointly_valid_parent_sets(cpdag, targets, max_enum)?;
    effects_from_parent_sets(cov, &parents, response, method)
}

/// The population multiset: true covariance, true CPDAG.
pub fn oracle_effects(sem: &LinearSem, targets: &[usize], response: usize, max_enum: usize) -> Result<EffectMultiset> {
    let cpdag = dag_to_cpdag(sem.graph().dag());
    effects_from_cpdag(&true_covariance(sem), &cpdag, targets, response, Method::Rrc, max_enum)
}

/// Per parent tuple of `(i, j)`: joint effects minus single effects,
/// `(θ_i^{(i,j)} + θ_j^{(i,j)}) − (θ_i + θ_j)`, with singles adjusted for
/// the same tuple's parent sets.
pub fn epistasis(cov: &CovMatrix, parents: &ParentMultiset, response: usize, method: Method) -> Result<EffectMultiset> {
    if parents.targets().len() != 2 {
        return Err(Error::InvalidArgument("epistasis needs exactly two targets".into()));
    }
    let tuples: Vec<(ParentAssignment, u64)> = parents.assignments().collect();
    let entries = tuples
        .par_iter()
        .map(|(pa, m)| {
            let local = cov.submatrix(&pa.variables(&[response]))?;
            let joint = method.effect(&local, pa, response)?;
            let single_i = method.effect(&local, &pa.restrict(0), response)?;
            let single_j = method.effect(&local, &pa.restrict(1), response)?;
            let score = (joint.values[0] + joint.values[1]) - (single_i.values[0] + single_j.values[0]);
            Ok(EffectEntry { values: vec![score], multiplicity: *m, parent_sets: pa.parent_lists() })
        })
        .collect::<Result<Vec<_>>>()?;
    EffectMultiset::new(parents.targets().to_vec(), response, entries, parents.superset())
}

/// [`epistasis`] with the CPDAG learned from `data` as in [`joint_ida`].
pub fn epistasis_score(data: &DMatrix<f64>, i: usize, j: usize, response: usize, cfg: &JointIdaConfig) -> Result<EffectMultiset> {
    let r = joint_ida(data, &[i, j], response, cfg)?;
    epistasis(&r.cov, &r.parent_sets, response, cfg.method)
}

/// The machine-readable result document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointIdaReport {
    pub targets: Vec<usize>,
    pub response: usize,
    pub method: Method,
    pub corr_kind: CorrKind,
    pub alpha: f64,
    pub multiset: Vec<EffectEntry>,
    pub summaries: Summaries,
    pub superset: bool,
    pub learned_graph_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summaries {
    pub minabs: Vec<f64>,
    pub aver: Vec<f64>,
}

impl JointIdaReport {
    pub fn new(m: &EffectMultiset, cfg: &JointIdaConfig, learned_graph_ref: Option<String>) -> Result<Self> {
        let k = m.dim();
        Ok(Self {
            targets: m.targets.clone(),
            response: m.response,
            method: cfg.method,
            corr_kind: cfg.corr_kind,
            alpha: cfg.ci.alpha,
            multiset: m.entries.clone(),
            summaries: Summaries {
                minabs: (0..k).map(|i| summarize(m, i, Summary::Minabs)).collect::<Result<_>>()?,
                aver: (0..k).map(|i| summarize(m, i, Summary::Aver)).collect::<Result<_>>()?,
            },
            superset: m.superset,
            learned_graph_ref,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sem::sample;
    use std::collections::BTreeSet;

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    fn true_tuple(m: &EffectMultiset, tuple: &[Vec<usize>]) -> Vec<f64> {
        m.entries.iter().find(|e| e.parent_sets == tuple).expect("true tuple present").values.clone()
    }

    #[test]
    fn known_cpdag_with_true_covariance_is_the_oracle() {
        let sem = fixtures::six_node_sem();
        let oracle = oracle_effects(&sem, &[1, 2], 6, DEFAULT_MAX_ENUM).unwrap();
        let v = true_tuple(&oracle, &[vec![5], vec![3, 4]]);
        assert!((v[0] - 0.99).abs() < 1e-12 && (v[1] - 0.4).abs() < 1e-12);

        let cov = true_covariance(&sem);
        let cpdag = dag_to_cpdag(sem.graph().dag());
        let mcd = effects_from_cpdag(&cov, &cpdag, &[1, 2], 6, Method::Mcd, DEFAULT_MAX_ENUM).unwrap();
        assert!(multiset_distance(&oracle, &mcd) < 1e-10);
    }

    #[test]
    fn sample_effects_with_known_cpdag() {
        let sem = fixtures::six_node_sem();
        let x = sample(&sem, 100_000, 17);
        let cfg = JointIdaConfig { known_cpdag: Some(dag_to_cpdag(sem.graph().dag())), ..JointIdaConfig::default() };
        let r = joint_ida(&x, &[1, 2], 6, &cfg).unwrap();
        let v = true_tuple(&r.multiset, &[vec![5], vec![3, 4]]);
        assert!((v[0] - 0.99).abs() < 0.05 && (v[1] - 0.4).abs() < 0.05, "{v:?}");
    }

    #[test]
    fn six_node_class_hides_a_weak_edge_at_moderate_n() {
        // partial correlation of 1 and 5 given 2 is about 0.004
        let sem = fixtures::six_node_sem();
        let r = joint_ida(&sample(&sem, 100_000, 17), &[1, 2], 6, &JointIdaConfig::default()).unwrap();
        assert!(!r.cpdag.adjacent(1, 5));
        assert_ne!(r.cpdag, dag_to_cpdag(sem.graph().dag()));
    }

    #[test]
    fn learned_pipeline_converges_on_a_faithful_sem() {
        let g = crate::graph::WeightedDag::new(5, &[(1, 3, 0.8), (2, 3, -0.6), (3, 4, 0.7), (4, 5, 0.5), (2, 5, 0.4)]).unwrap();
        let sem = LinearSem::gaussian(g);
        let oracle = oracle_effects(&sem, &[3, 4], 5, DEFAULT_MAX_ENUM).unwrap();
        let r = joint_ida(&sample(&sem, 50_000, 3), &[3, 4], 5, &JointIdaConfig::default()).unwrap();
        assert_eq!(r.cpdag, dag_to_cpdag(sem.graph().dag()));
        assert!(multiset_distance(&r.multiset, &oracle) < 0.05);
    }

    #[test]
    fn epistasis_on_six_node_sem() {
        let cov = true_covariance(&fixtures::six_node_sem());
        let pa = ParentAssignment::new(vec![1, 2], vec![set(&[5]), set(&[3, 4])]).unwrap();
        let pm = ParentMultiset::new(vec![1, 2], [(pa.parent_sets().to_vec(), 1)].into(), false).unwrap();
        for method in [Method::Rrc, Method::Mcd] {
            let e = epistasis(&cov, &pm, 6, method).unwrap();
            assert!((e.entries[0].values[0] + 0.5).abs() < 1e-12);
            assert!((e.entries[0].values[0] + 1.25 * 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn disconnected_targets_have_no_epistasis() {
        let g = crate::graph::WeightedDag::new(3, &[(1, 3, 0.5), (2, 3, -0.7)]).unwrap();
        let cov = true_covariance(&LinearSem::gaussian(g));
        let pm = ParentMultiset::new(vec![1, 2], [(vec![set(&[]), set(&[])], 1)].into(), false).unwrap();
        let e = epistasis(&cov, &pm, 3, Method::Rrc).unwrap();
        assert!(e.entries[0].values[0].abs() < 1e-12);
    }

    #[test]
    fn report_is_deterministic_json() {
        let sem = fixtures::six_node_sem();
        let x = sample(&sem, 2_000, 3);
        let cfg = JointIdaConfig::default();
        let a = JointIdaReport::new(&joint_ida(&x, &[1, 2], 6, &cfg).unwrap().multiset, &cfg, None).unwrap();
        let b = JointIdaReport::new(&joint_ida(&x, &[1, 2], 6, &cfg).unwrap().multiset, &cfg, None).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let v = serde_json::to_value(&a).unwrap();
        for key in ["targets", "response", "method", "corr_kind", "alpha", "multiset", "summaries", "superset", "learned_graph_ref"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn query_errors() {
        let x = sample(&fixtures::six_node_sem(), 50, 1);
        let cfg = JointIdaConfig::default();
        assert!(joint_ida(&x, &[1, 6], 6, &cfg).is_err());
        assert!(joint_ida(&x, &[1], 9, &cfg).is_err());
        let mut bad = x.clone();
        bad[(3, 2)] = f64::NAN;
        assert!(joint_ida(&bad, &[1], 6, &cfg).is_err());
    }
}
