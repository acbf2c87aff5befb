//! Self-checks behind the `validate` command.
//!
//! Each check reproduces a worked example or a property of the estimators
//! and reports pass/fail with a one-line detail.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fixtures;
use crate::graph::{dag_to_cpdag, Dag};
use crate::learn::{rank_correlation_matrix, sample_covariance, RankKind};
use crate::opin::{
    adjusted_effect, asymptotic_variance, mcd_effect, mcd_sigma_k, mechanism_change_covariance, rrc_effect, Method,
    ParentAssignment,
};
use crate::parentsets::{global_parent_sets, jointly_valid_parent_sets, multisets_equivalent, DEFAULT_MAX_ENUM};
use crate::pipeline::{
    joint_ida, multiset_distance, oracle_effects, summarize, CorrKind, EffectMultiset, JointIdaConfig, Summary,
};
use crate::sem::{
    intervened_covariance, npn_sample, path_effect, random_sem, sample, true_covariance, LinearSem, NpnModel, Transform,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Worked examples with exact answers (fast).
    WorkedExamples,
    /// Randomized oracle and property checks (seconds).
    Properties,
    /// Everything, including the Monte Carlo checks (minutes).
    Full,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-examples" => Ok(Suite::WorkedExamples),
            "properties" => Ok(Suite::Properties),
            "full" => Ok(Suite::Full),
            _ => Err(Error::InvalidArgument(format!("unknown suite `{s}` (paper-examples, properties, full)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:>2}  {:<4}  {:<32}  {:>8.2}s  {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.seconds,
            self.detail
        )
    }
}

type CheckFn = fn() -> Result<(bool, String)>;

const CHECKS: &[(u32, &str, CheckFn, Suite)] = &[
    (1, "six-node joint effects", check_six_node_effects, Suite::WorkedExamples),
    (2, "adjustment cannot recover", check_adjustment_failure, Suite::WorkedExamples),
    (3, "parent-set examples", check_parent_set_examples, Suite::WorkedExamples),
    (4, "oracle agreement", check_oracle_agreement, Suite::Properties),
    (5, "single-target MCD = regression", check_single_target_mcd, Suite::Properties),
    (6, "semi-local = global", check_semi_local_soundness, Suite::Properties),
    (7, "delta-method covariance", check_asymptotic_variance, Suite::Full),
    (8, "pipeline consistency", check_consistency, Suite::Full),
    (9, "nonparanormal", check_nonparanormal, Suite::Full),
    (10, "Lipschitz summaries", check_lipschitz, Suite::Properties),
    (11, "mechanism changes", check_mechanism_change, Suite::Properties),
];

fn included(check: Suite, suite: Suite) -> bool {
    match suite {
        Suite::Full => true,
        Suite::Properties => check != Suite::Full,
        Suite::WorkedExamples => check == Suite::WorkedExamples,
    }
}

/// Runs every check of `suite` in order.
pub fn run_suite(suite: Suite) -> Vec<Check> {
    CHECKS
        .iter()
        .filter(|c| included(c.3, suite))
        .map(|&(id, name, f, _)| {
            let start = Instant::now();
            let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
            Check { id, name, passed, detail, seconds: start.elapsed().as_secs_f64() }
        })
        .collect()
}

fn set(xs: &[usize]) -> BTreeSet<usize> {
    xs.iter().copied().collect()
}

fn true_parents(dag: &Dag, targets: &[usize]) -> Result<ParentAssignment> {
    ParentAssignment::new(targets.to_vec(), targets.iter().map(|&t| dag.parents(t)).collect::<Result<_>>()?)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn check_six_node_effects() -> Result<(bool, String)> {
    let sem = fixtures::six_node_sem();
    let s = true_covariance(&sem);
    let g = sem.graph();
    let single = [path_effect(g, &[1], 6)?[0], path_effect(g, &[2], 6)?[0]];
    let joint = path_effect(g, &[1, 2], 6)?;
    let pa = true_parents(g.dag(), &[1, 2])?;
    let rrc = rrc_effect(&s, &pa, 6)?.values;
    let mcd = mcd_effect(&s.submatrix(&pa.variables(&[6]))?, &pa, 6)?.values;
    let mut worst = max_diff(&single, &[1.49, 0.4]);
    for v in [&joint, &rrc, &mcd] {
        worst = worst.max(max_diff(v, &[0.99, 0.4]));
    }
    Ok((worst < 1e-10, format!("max deviation {worst:.2e}")))
}

fn check_adjustment_failure() -> Result<(bool, String)> {
    let s = true_covariance(&fixtures::six_node_sem());
    let others = [2, 3, 4, 5];
    let mut closest = f64::INFINITY;
    for mask in 0..16u32 {
        let adj: BTreeSet<usize> = (0..4).filter(|k| mask >> k & 1 == 1).map(|k| others[k]).collect();
        closest = closest.min((adjusted_effect(&s, 1, 6, &adj)? - 0.99).abs());
    }
    Ok((closest > 1e-3, format!("closest coefficient is {closest:.4} from 0.99")))
}

fn check_parent_set_examples() -> Result<(bool, String)> {
    let chain = fixtures::three_node_chain_cpdag();
    let semi = jointly_valid_parent_sets(&chain, &[1, 2], DEFAULT_MAX_ENUM)?;
    let want: BTreeSet<Vec<BTreeSet<usize>>> =
        [vec![set(&[]), set(&[3])], vec![set(&[3]), set(&[])], vec![set(&[3]), set(&[3])]].into();
    let chain_ok = semi.entries().keys().cloned().collect::<BTreeSet<_>>() == want
        && semi.entries().values().all(|&m| m == 1);

    let c = fixtures::eight_node_cpdag();
    let semi = jointly_valid_parent_sets(&c, &[1, 2, 3], DEFAULT_MAX_ENUM)?;
    let global = global_parent_sets(&c, &[1, 2, 3])?;
    let eight_ok = semi.distinct() == 6
        && global.size() == 12
        && global.entries().keys().eq(semi.entries().keys())
        && global.entries().values().all(|&m| m == 2)
        && multisets_equivalent(&semi, &global);
    Ok((
        chain_ok && eight_ok,
        format!("chain {}, eight-node {} ({} semi-local, {} global)", chain_ok, eight_ok, semi.distinct(), global.size()),
    ))
}

fn random_query(rng: &mut ChaCha8Rng, p: usize, k: usize) -> (Vec<usize>, usize) {
    let mut nodes: Vec<usize> = (1..=p).collect();
    nodes.shuffle(rng);
    (nodes[..k].to_vec(), nodes[k])
}

fn check_oracle_agreement() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let p = rng.random_range(4..=12);
        let k = rng.random_range(1..=3);
        let sem = random_sem(p, 2.0, &mut rng);
        let (targets, response) = random_query(&mut rng, p, k);
        let s = true_covariance(&sem);
        let pa = true_parents(sem.graph().dag(), &targets)?;
        let truth = path_effect(sem.graph(), &targets, response)?;
        let rrc = rrc_effect(&s, &pa, response)?.values;
        let mcd = mcd_effect(&s.submatrix(&pa.variables(&[response]))?, &pa, response)?.values;
        worst = worst.max(max_diff(&rrc, &truth)).max(max_diff(&mcd, &truth)).max(max_diff(&rrc, &mcd));
    }
    Ok((worst < 1e-8, format!("max deviation {worst:.2e} over 200 graphs")))
}

fn check_single_target_mcd() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0_f64;
    for rep in 0..50 {
        let p = rng.random_range(3..=10);
        let sem = random_sem(p, 2.0, &mut rng);
        let n = rng.random_range(30..=300);
        let s = sample_covariance(&sample(&sem, n, rep))?;
        let (t, response) = random_query(&mut rng, p, 1);
        let pa: BTreeSet<usize> = (1..=p).filter(|&v| v != t[0] && rng.random_bool(0.3)).collect();
        let a = adjusted_effect(&s, t[0], response, &pa)?;
        let m = mcd_effect(&s, &ParentAssignment::single(t[0], pa)?, response)?.values[0];
        worst = worst.max((a - m).abs());
    }
    Ok((worst < 1e-10, format!("max deviation {worst:.2e} over 50 covariances")))
}

fn check_semi_local_soundness() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = 0;
    let mut done = 0;
    while done < 100 {
        let p = rng.random_range(3..=9);
        let k = rng.random_range(1..=3.min(p));
        let c = dag_to_cpdag(random_sem(p, 2.5, &mut rng).graph().dag());
        let (targets, _) = random_query(&mut rng, p, k.min(p - 1));
        let semi = jointly_valid_parent_sets(&c, &targets, DEFAULT_MAX_ENUM)?;
        if semi.superset() {
            continue;
        }
        done += 1;
        if !multisets_equivalent(&semi, &global_parent_sets(&c, &targets)?) {
            failures += 1;
        }
    }
    Ok((failures == 0, format!("{failures} of 100 CPDAGs disagree")))
}

fn sample_covariance_of(m: &[Vec<f64>]) -> DMatrix<f64> {
    let n = m.len() as f64;
    let k = m[0].len();
    let mean: Vec<f64> = (0..k).map(|j| m.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    DMatrix::from_fn(k, k, |a, b| m.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).sum::<f64>() / (n - 1.0))
}

fn check_asymptotic_variance() -> Result<(bool, String)> {
    let sem = fixtures::six_node_sem();
    let pa = true_parents(sem.graph().dag(), &[1, 2])?;
    let theta = path_effect(sem.graph(), &[1, 2], 6)?;
    let n = 2000;
    let mut details = Vec::new();
    let mut ok = true;
    for method in [Method::Rrc, Method::Mcd] {
        let limit = asymptotic_variance(&sample(&sem, 200_000, 999), method, &pa, 6)?.limit_covariance;
        let scaled = (0..1000u64)
            .into_par_iter()
            .map(|seed| {
                let s = sample_covariance(&sample(&sem, n, 10_000 + seed))?;
                let est = method.effect(&s, &pa, 6)?.values;
                Ok(est.iter().zip(&theta).map(|(e, t)| (n as f64).sqrt() * (e - t)).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        let emp = sample_covariance_of(&scaled);
        let rel = (&emp - &limit).norm() / limit.norm();
        ok &= rel < 0.15;
        details.push(format!("{method} {:.1}%", 100.0 * rel));
    }
    Ok((ok, format!("relative Frobenius error {}", details.join(", "))))
}

fn pick_triple(rng: &mut ChaCha8Rng, sem: &LinearSem) -> Result<Option<(Vec<usize>, usize)>> {
    let p = sem.num_nodes();
    for _ in 0..100 {
        let (targets, response) = random_query(rng, p, 2);
        let reach = targets
            .iter()
            .map(|&t| sem.graph().dag().descendants(t))
            .collect::<Result<Vec<_>>>()?;
        if reach.iter().any(|d| d.contains(&response)) {
            return Ok(Some((targets, response)));
        }
    }
    Ok(None)
}

fn check_consistency() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut good = 0;
    let mut cases = 0;
    while cases < 20 {
        let sem = random_sem(10, 2.0, &mut rng);
        let Some((targets, response)) = pick_triple(&mut rng, &sem)? else {
            continue;
        };
        cases += 1;
        let oracle = oracle_effects(&sem, &targets, response, DEFAULT_MAX_ENUM)?;
        let cfg = JointIdaConfig::default();
        let med = |n: usize| -> Result<f64> {
            let d = (0..5u64)
                .into_par_iter()
                .map(|seed| {
                    let x = sample(&sem, n, 1000 * cases as u64 + seed);
                    Ok(multiset_distance(&joint_ida(&x, &targets, response, &cfg)?.multiset, &oracle))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(median(d))
        };
        let (small, large) = (med(1_000)?, med(100_000)?);
        if large < 0.1 && large < small {
            good += 1;
        }
    }
    Ok((good >= 18, format!("{good}/20 SEMs improve to below 0.1")))
}

fn npn_model(rng: &mut ChaCha8Rng) -> Result<NpnModel> {
    let sem = random_sem(8, 2.0, rng);
    let transforms = (0..8).map(|j| if j % 2 == 0 { Transform::Exp } else { Transform::Cubic }).collect();
    NpnModel::from_sem(&sem, transforms)
}

fn check_nonparanormal() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let model = npn_model(&mut rng)?;
    let sigma0 = model.latent_correlation();
    let rc = rank_correlation_matrix(&npn_sample(&model, 100_000, 1), RankKind::Spearman)?;
    let corr_err = rc.matrix.max_abs_diff(&sigma0)?;
    let Some((targets, response)) = pick_triple(&mut rng, model.base())? else {
        return Ok((false, "no target pair reaches a response".into()));
    };
    let oracle = oracle_effects(model.base(), &targets, response, DEFAULT_MAX_ENUM)?;
    let cfg = JointIdaConfig { corr_kind: CorrKind::Spearman, ..JointIdaConfig::default() };
    let d = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let x = npn_sample(&model, 100_000, 100 + seed);
            Ok(multiset_distance(&joint_ida(&x, &targets, response, &cfg)?.multiset, &oracle))
        })
        .collect::<Result<Vec<f64>>>()?;
    let med = median(d);
    Ok((
        corr_err < 0.02 && med < 0.1,
        format!("correlation error {corr_err:.4}, median effect distance {med:.4}"),
    ))
}

fn random_multiset(rng: &mut ChaCha8Rng, size: usize) -> EffectMultiset {
    let mut values = Vec::new();
    let mut left = size;
    while left > 0 {
        let m = rng.random_range(1..=left.min(3));
        values.push((vec![rng.random_range(-3.0..3.0)], m as u64));
        left -= m;
    }
    EffectMultiset::from_values(vec![1], 2, values).expect("well-formed")
}

fn check_lipschitz() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut violations = 0;
    let mut finite = 0;
    for _ in 0..1000 {
        let size = rng.random_range(1..=8);
        let other = if rng.random_bool(0.9) { size } else { rng.random_range(1..=8) };
        let a = random_multiset(&mut rng, size);
        let b = random_multiset(&mut rng, other);
        let d = multiset_distance(&a, &b);
        if !d.is_finite() {
            continue;
        }
        finite += 1;
        for stat in [Summary::Minabs, Summary::Aver] {
            if (summarize(&a, 0, stat)? - summarize(&b, 0, stat)?).abs() > d + 1e-12 {
                violations += 1;
            }
        }
    }
    Ok((violations == 0, format!("{violations} violations over {finite} finite pairs")))
}

fn check_mechanism_change() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut restore = 0.0_f64;
    let mut cut_exact = true;
    let mut cut_dev = 0.0_f64;
    let mut done = 0;
    while done < 50 {
        let p = rng.random_range(3..=10);
        let sem = random_sem(p, 2.5, &mut rng);
        let dag = sem.graph().dag();
        let with_parents: Vec<usize> = (1..=p).filter(|&v| !dag.parents(v).unwrap().is_empty()).collect();
        let Some(&node) = with_parents.choose(&mut rng) else {
            continue;
        };
        done += 1;
        let s = true_covariance(&sem);
        let pa = dag.parents(node)?;
        let weights: BTreeMap<usize, f64> = pa.iter().map(|&u| (u, sem.graph().weight(u, node))).collect();
        restore = restore.max(mechanism_change_covariance(&s, node, &pa, &weights)?.max_abs_diff(&s)?);
        let cut = mechanism_change_covariance(&s, node, &pa, &BTreeMap::new())?;
        cut_exact &= cut == mcd_sigma_k(&s, &ParentAssignment::single(node, pa)?)?;
        cut_dev = cut_dev.max(cut.max_abs_diff(&intervened_covariance(&sem, &[node])?)?);
    }
    Ok((
        restore < 1e-10 && cut_exact && cut_dev < 1e-10,
        format!("restore {restore:.2e}, do-intervention {cut_dev:.2e}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples_pass() {
        for c in run_suite(Suite::WorkedExamples) {
            assert!(c.passed, "{c}");
        }
    }

    #[test]
    fn suite_names_parse() {
        assert_eq!("full".parse::<Suite>().unwrap(), Suite::Full);
        assert!("everything".parse::<Suite>().is_err());
    }
}
