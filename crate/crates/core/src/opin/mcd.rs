use std::collections::{BTreeMap, BTreeSet};

use super::{check_response, generalized_cholesky, EffectVector, ParentAssignment};
use crate::cov::CovMatrix;
use crate::error::{Error, Result};

/// One modification step: factor with `node`'s parents first, overwrite the
/// row of `node` in `L` (zero off-diagonals, then `−w` per entry of `row`),
/// and recompose in the input label order.
fn replace_row(cov: &CovMatrix, node: usize, parents: &BTreeSet<usize>, row: &[(usize, f64)]) -> Result<CovMatrix> {
    let mut ordering: Vec<usize> = parents.iter().copied().collect();
    ordering.push(node);
    let mut rest: Vec<usize> = cov.labels().iter().copied().filter(|l| *l != node && !parents.contains(l)).collect();
    rest.sort_unstable();
    ordering.extend(rest);
    let mut f = generalized_cholesky(cov, &ordering)?;
    let q = parents.len();
    for c in 0..q {
        f.l[(q, c)] = 0.0;
    }
    for &(u, w) in row {
        let c = ordering[..q].iter().position(|&o| o == u).expect("row keys are parents");
        f.l[(q, c)] = -w;
    }
    f.recompose_as(cov.labels())
}

/// `Σ` after intervening on every target in turn, each step cutting the
/// target off from its parent set. Output keeps `cov`'s label order.
pub fn mcd_sigma_k(cov: &CovMatrix, pa: &ParentAssignment) -> Result<CovMatrix> {
    let mut sigma = cov.clone();
    for (&t, parents) in pa.targets().iter().zip(pa.parent_sets()) {
        sigma = replace_row(&sigma, t, parents, &[])?;
    }
    Ok(sigma)
}

/// Joint effect `Σ^[k]_{ip} / Σ^[k]_{ii}`, zero for targets with the
/// response among their parents. `cov` may be restricted to the targets,
/// their parents and the response.
pub fn mcd_effect(cov: &CovMatrix, pa: &ParentAssignment, response: usize) -> Result<EffectVector> {
    check_response(pa, response)?;
    cov.index_of(response)?;
    let sk = mcd_sigma_k(cov, pa)?;
    let values = pa
        .targets()
        .iter()
        .zip(pa.parent_sets())
        .map(|(&t, parents)| {
            if parents.contains(&response) {
                Ok(0.0)
            } else {
                Ok(sk.get(t, response)? / sk.get(t, t)?)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    EffectVector::new(pa.targets().to_vec(), response, values)
}

/// Covariance after replacing the weights on `node`'s incoming edges. Parents
/// in `old_pa` missing from `new_weights` lose their edge, so an empty map is
/// the point intervention on `node`.
pub fn mechanism_change_covariance(
    cov: &CovMatrix,
    node: usize,
    old_pa: &BTreeSet<usize>,
    new_weights: &BTreeMap<usize, f64>,
) -> Result<CovMatrix> {
    if old_pa.contains(&node) {
        return Err(Error::InvalidArgument(format!("{node} is in its own parent set")));
    }
    if let Some(u) = new_weights.keys().find(|u| !old_pa.contains(u)) {
        return Err(Error::InvalidArgument(format!("{u} is not among the parents of {node}")));
    }
    let row: Vec<(usize, f64)> = new_weights.iter().map(|(&u, &w)| (u, w)).collect();
    replace_row(cov, node, old_pa, &row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::opin::adjusted_effect;
    use crate::sem::{intervened_covariance, true_covariance};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    #[test]
    fn restricted_covariance_gives_the_joint_effect() {
        let s = true_covariance(&fixtures::six_node_sem());
        let pa = ParentAssignment::new(vec![1, 2], vec![set(&[5]), set(&[3, 4])]).unwrap();
        let su = s.submatrix(&pa.variables(&[6])).unwrap();
        let e = mcd_effect(&su, &pa, 6).unwrap();
        assert_abs_diff_eq!(e.values[0], 0.99, epsilon = 1e-12);
        assert_abs_diff_eq!(e.values[1], 0.4, epsilon = 1e-12);
    }

    #[test]
    fn sigma_k_matches_intervened_covariance() {
        let sem = fixtures::six_node_sem();
        let s = true_covariance(&sem);
        let pa = ParentAssignment::new(vec![1, 2], vec![set(&[5]), set(&[3, 4])]).unwrap();
        let u = pa.variables(&[6]);
        let sk = mcd_sigma_k(&s.submatrix(&u).unwrap(), &pa).unwrap();
        let truth = intervened_covariance(&sem, &[1, 2]).unwrap().submatrix(&u).unwrap();
        assert!(sk.max_abs_diff(&truth).unwrap() < 1e-12);
        assert_eq!(sk.labels(), &u[..]);
    }

    #[test]
    fn intervening_everywhere_gives_error_covariance() {
        let sem = fixtures::six_node_sem();
        let s = true_covariance(&sem);
        let targets: Vec<usize> = (1..=6).collect();
        let pa = ParentAssignment::new(targets.clone(), targets.iter().map(|&t| sem.graph().dag().parents(t).unwrap()).collect())
            .unwrap();
        let sk = mcd_sigma_k(&s, &pa).unwrap();
        assert!((sk.values() - DMatrix::<f64>::identity(6, 6)).amax() < 1e-12);
    }

    #[test]
    fn edgeless_covariance_is_unchanged() {
        let c = CovMatrix::from_matrix(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0]))).unwrap();
        let pa = ParentAssignment::new(vec![1, 3], vec![set(&[]), set(&[])]).unwrap();
        assert_eq!(mcd_sigma_k(&c, &pa).unwrap(), c);
    }

    #[test]
    fn single_target_equals_adjusted_regression_on_a_sample() {
        let x = crate::sem::sample(&fixtures::six_node_sem(), 200, 4);
        let s = crate::learn::sample_covariance(&x).unwrap();
        let pa = ParentAssignment::single(4, set(&[1, 5])).unwrap();
        let m = mcd_effect(&s, &pa, 2).unwrap().values[0];
        let a = adjusted_effect(&s, 4, 2, &set(&[1, 5])).unwrap();
        assert_abs_diff_eq!(m, a, epsilon = 1e-12);
    }

    #[test]
    fn response_among_parents_is_zeroed() {
        let s = true_covariance(&fixtures::six_node_sem());
        let pa = ParentAssignment::single(1, set(&[5])).unwrap();
        assert_eq!(mcd_effect(&s, &pa, 5).unwrap().values, vec![0.0]);
    }

    #[test]
    fn mechanism_change_matches_edited_sem() {
        let sem = fixtures::six_node_sem();
        let s = true_covariance(&sem);
        let changed = mechanism_change_covariance(&s, 3, &set(&[1]), &BTreeMap::from([(1, 0.5)])).unwrap();
        let edited = sem.with_incoming_weights(3, &[(1, 0.5)]).unwrap();
        assert!(changed.max_abs_diff(&true_covariance(&edited)).unwrap() < 1e-12);

        let same = mechanism_change_covariance(&s, 4, &set(&[1, 3, 5]), &BTreeMap::from([(1, 0.3), (3, 0.8), (5, 0.7)]))
            .unwrap();
        assert!(same.max_abs_diff(&s).unwrap() < 1e-12);

        let cut = mechanism_change_covariance(&s, 4, &set(&[1, 3, 5]), &BTreeMap::new()).unwrap();
        let pa = ParentAssignment::single(4, set(&[1, 3, 5])).unwrap();
        assert_eq!(cut, mcd_sigma_k(&s, &pa).unwrap());
    }

    #[test]
    fn mechanism_change_rejects_foreign_parents() {
        let s = true_covariance(&fixtures::six_node_sem());
        assert!(mechanism_change_covariance(&s, 3, &set(&[1]), &BTreeMap::from([(2, 0.5)])).is_err());
    }
}
