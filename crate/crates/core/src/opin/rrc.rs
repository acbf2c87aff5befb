use std::collections::HashMap;

use super::{adjusted_effect, check_response, EffectVector, ParentAssignment};
use crate::cov::CovMatrix;
use crate::error::Result;

/// Joint effect by recursive regressions.
///
/// `θ(i, e, S)` is the effect of target `i` on endpoint `e` with the targets
/// in `S` held fixed. Singletons are adjusted regressions on `PA_i`; larger
/// sets drop the last other target `j` of `S` (in the caller's order):
///
/// `θ(i, e, S) = θ(i, e, S∖j) − θ(i, j, S∖j) · θ(j, e, S∖i)`.
pub fn rrc_effect(cov: &CovMatrix, pa: &ParentAssignment, response: usize) -> Result<EffectVector> {
    check_response(pa, response)?;
    let k = pa.len();
    let full = (1u64 << k) - 1;
    let mut rec = Recursion { cov, pa, memo: HashMap::new() };
    let values = (0..k)
        .map(|i| rec.theta(i, response, full))
        .collect::<Result<Vec<_>>>()?;
    EffectVector::new(pa.targets().to_vec(), response, values)
}

struct Recursion<'a> {
    cov: &'a CovMatrix,
    pa: &'a ParentAssignment,
    memo: HashMap<(u64, usize, usize), f64>,
}

impl Recursion<'_> {
    fn theta(&mut self, i: usize, endpoint: usize, set: u64) -> Result<f64> {
        let parents = &self.pa.parent_sets()[i];
        if parents.contains(&endpoint) {
            return Ok(0.0);
        }
        if let Some(&v) = self.memo.get(&(set, i, endpoint)) {
            return Ok(v);
        }
        let others = set & !(1u64 << i);
        let value = if others == 0 {
            adjusted_effect(self.cov, self.pa.targets()[i], endpoint, parents)?
        } else {
            let j = 63 - others.leading_zeros() as usize;
            let tj = self.pa.targets()[j];
            let without_j = set & !(1u64 << j);
            let direct = self.theta(i, endpoint, without_j)?;
            let to_j = self.theta(i, tj, without_j)?;
            direct - to_j * self.theta(j, endpoint, set & !(1u64 << i))?
        };
        self.memo.insert((set, i, endpoint), value);
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sem::{path_effect, true_covariance};
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeSet;

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    fn six_node_pa(targets: &[usize]) -> ParentAssignment {
        let g = fixtures::six_node_weighted_dag();
        ParentAssignment::new(targets.to_vec(), targets.iter().map(|&t| g.dag().parents(t).unwrap()).collect())
            .unwrap()
    }

    #[test]
    fn joint_effect_of_one_and_two() {
        let s = true_covariance(&fixtures::six_node_sem());
        let pa = ParentAssignment::new(vec![1, 2], vec![set(&[5]), set(&[3, 4])]).unwrap();
        let e = rrc_effect(&s, &pa, 6).unwrap();
        assert_abs_diff_eq!(e.values[0], 0.99, epsilon = 1e-12);
        assert_abs_diff_eq!(e.values[1], 0.4, epsilon = 1e-12);
    }

    #[test]
    fn single_target_is_adjusted_regression() {
        let s = true_covariance(&fixtures::six_node_sem());
        let pa = ParentAssignment::single(3, set(&[1])).unwrap();
        assert_eq!(rrc_effect(&s, &pa, 6).unwrap().values[0], adjusted_effect(&s, 3, 6, &set(&[1])).unwrap());
    }

    #[test]
    fn three_targets_match_paths() {
        let sem = fixtures::six_node_sem();
        let s = true_covariance(&sem);
        for targets in [[1, 2, 5], [5, 2, 1], [3, 4, 1], [4, 1, 3]] {
            let e = rrc_effect(&s, &six_node_pa(&targets), 6).unwrap();
            let truth = path_effect(sem.graph(), &targets, 6).unwrap();
            for (a, b) in e.values.iter().zip(&truth) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn response_in_parent_set_gives_zero() {
        let s = true_covariance(&fixtures::six_node_sem());
        let e = rrc_effect(&s, &six_node_pa(&[1, 3]), 5).unwrap();
        assert_eq!(e.values[0], 0.0);
    }
}
