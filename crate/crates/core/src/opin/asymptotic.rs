//! Delta-method limit covariances of `√n(θ̂ − θ)` for two targets.
//!
//! Both estimators are smooth maps of `vech(Σ̂_U)`, whose limit law is
//! `N(0, Γ)` with `Γ = Cov(vech(UUᵀ))`. The inner Jacobians are taken by
//! central differences; the outer ones are written out.

use nalgebra::{DMatrix, DVector};

use super::{adjusted_effect, check_response, mcd_effect, mcd_sigma_k, rrc_effect, EffectVector, Method, ParentAssignment};
use crate::cov::CovMatrix;
use crate::error::{Error, Result};
use crate::linalg::{unvech, vech, vech_index};

/// Estimate plus its limit covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticVariance {
    pub estimate: EffectVector,
    /// Covariance of the limit law of `√n(θ̂ − θ)`.
    pub limit_covariance: DMatrix<f64>,
    pub n: usize,
}

/// Empirical covariance of `vech(u uᵀ)` over the rows `u` of `centered`.
pub fn vech_gamma(centered: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, q) = centered.shape();
    let d = q * (q + 1) / 2;
    let mut z = DMatrix::<f64>::zeros(n, d);
    for r in 0..n {
        let mut k = 0;
        for j in 0..q {
            for i in j..q {
                z[(r, k)] = centered[(r, i)] * centered[(r, j)];
                k += 1;
            }
        }
    }
    let means = z.row_mean();
    for r in 0..n {
        let mut row = z.row_mut(r);
        row -= &means;
    }
    (z.transpose() * &z) / (n as f64 - 1.0)
}

/// `Γ` for Gaussian `U`: `Cov(U_a U_b, U_c U_d) = Σ_ac Σ_bd + Σ_ad Σ_bc`.
pub fn gaussian_gamma(cov: &CovMatrix) -> DMatrix<f64> {
    let s = cov.values();
    let q = cov.dim();
    let pairs: Vec<(usize, usize)> = (0..q).flat_map(|j| (j..q).map(move |i| (i, j))).collect();
    DMatrix::from_fn(pairs.len(), pairs.len(), |r, c| {
        let (a, b) = pairs[r];
        let (cc, d) = pairs[c];
        s[(a, cc)] * s[(b, d)] + s[(a, d)] * s[(b, cc)]
    })
}

fn check_hypotheses(method: Method, pa: &ParentAssignment, response: usize) -> Result<()> {
    if pa.len() != 2 {
        return Err(Error::Hypothesis(format!("limit covariances need two targets, got {}", pa.len())));
    }
    check_response(pa, response)?;
    let all_parents: Vec<usize> = pa.parent_sets().iter().flatten().copied().collect();
    let guarded: Vec<usize> = match method {
        Method::Rrc => vec![pa.targets()[0], pa.targets()[1], response],
        Method::Mcd => vec![response],
    };
    if let Some(v) = guarded.iter().find(|v| all_parents.contains(v)) {
        return Err(Error::Hypothesis(format!("{v} is a parent of an intervention node")));
    }
    Ok(())
}

fn step(x: f64) -> f64 {
    (1e-5 * x.abs()).max(1e-5)
}

/// Central-difference Jacobian of `f` at `x`.
fn jacobian<F>(f: F, x: &DVector<f64>) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let mut cols = Vec::with_capacity(x.len());
    for l in 0..x.len() {
        let h = step(x[l]);
        let mut up = x.clone();
        up[l] += h;
        let mut down = x.clone();
        down[l] -= h;
        cols.push((f(&up)? - f(&down)?) / (2.0 * h));
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Limit covariance of `√n(θ̂ − θ)` given `Σ_U` (labels: targets, their
/// parents and the response) and `Γ` in the vech layout of `cov_u`.
pub fn limit_covariance(
    cov_u: &CovMatrix,
    gamma: &DMatrix<f64>,
    method: Method,
    pa: &ParentAssignment,
    response: usize,
) -> Result<DMatrix<f64>> {
    check_hypotheses(method, pa, response)?;
    let labels = cov_u.labels().to_vec();
    let q = labels.len();
    let d = q * (q + 1) / 2;
    if gamma.shape() != (d, d) {
        return Err(Error::InvalidArgument(format!("Γ must be {d}×{d}, got {:?}", gamma.shape())));
    }
    let at = |v: &DVector<f64>| CovMatrix::new(labels.clone(), unvech(v, q));
    let x = vech(cov_u.values());
    let (t1, t2) = (pa.targets()[0], pa.targets()[1]);
    let (pa1, pa2) = (&pa.parent_sets()[0], &pa.parent_sets()[1]);

    let jac = match method {
        Method::Rrc => {
            let pieces = |v: &DVector<f64>| -> Result<DVector<f64>> {
                let s = at(v)?;
                Ok(DVector::from_vec(vec![
                    adjusted_effect(&s, t1, response, pa1)?,
                    adjusted_effect(&s, t2, response, pa2)?,
                    adjusted_effect(&s, t1, t2, pa1)?,
                    adjusted_effect(&s, t2, t1, pa2)?,
                ]))
            };
            let lambda = jacobian(pieces, &x)?;
            let th = pieces(&x)?;
            let (t1p, t2p, t12, t21) = (th[0], th[1], th[2], th[3]);
            let f = DMatrix::from_row_slice(2, 4, &[1.0, -t12, -t2p, 0.0, -t21, 1.0, 0.0, -t1p]);
            f * lambda
        }
        Method::Mcd => {
            let first = pa.restrict(0);
            let second = pa.restrict(1);
            let step1 = |v: &DVector<f64>| -> Result<DVector<f64>> { Ok(vech(mcd_sigma_k(&at(v)?, &first)?.values())) };
            let step2 = |v: &DVector<f64>| -> Result<DVector<f64>> { Ok(vech(mcd_sigma_k(&at(v)?, &second)?.values())) };
            let lambda1 = jacobian(step1, &x)?;
            let s1 = step1(&x)?;
            let lambda2 = jacobian(step2, &s1)?;
            let s2 = at(&step2(&s1)?)?;
            let mut h = DMatrix::<f64>::zeros(2, d);
            let ip = cov_u.index_of(response)?;
            for (row, t) in [t1, t2].into_iter().enumerate() {
                let it = cov_u.index_of(t)?;
                let (stp, stt) = (s2.values()[(it, ip)], s2.values()[(it, it)]);
                h[(row, vech_index(it, ip, q))] = 1.0 / stt;
                h[(row, vech_index(it, it, q))] = -stp / (stt * stt);
            }
            h * lambda2 * lambda1
        }
    };
    let out = &jac * gamma * jac.transpose();
    Ok((&out + out.transpose()) * 0.5)
}

/// Point estimate and estimated limit covariance from raw data whose column
/// `c` holds node `c + 1`.
pub fn asymptotic_variance(
    data: &DMatrix<f64>,
    method: Method,
    pa: &ParentAssignment,
    response: usize,
) -> Result<AsymptoticVariance> {
    check_hypotheses(method, pa, response)?;
    let (n, p) = data.shape();
    let labels = pa.variables(&[response]);
    if let Some(&l) = labels.iter().find(|&&l| l > p) {
        return Err(Error::NodeOutOfRange { node: l, p });
    }
    if n <= labels.len() + 1 {
        return Err(Error::InvalidArgument(format!("{n} rows are too few for {} variables", labels.len())));
    }
    let mut centered = DMatrix::from_fn(n, labels.len(), |r, c| data[(r, labels[c] - 1)]);
    for c in 0..labels.len() {
        let mean = centered.column(c).mean();
        centered.column_mut(c).add_scalar_mut(-mean);
    }
    let cov_u = CovMatrix::new(labels, centered.transpose() * &centered / (n as f64 - 1.0))?;
    let gamma = vech_gamma(&centered);
    let limit = limit_covariance(&cov_u, &gamma, method, pa, response)?;
    let estimate = match method {
        Method::Rrc => rrc_effect(&cov_u, pa, response)?,
        Method::Mcd => mcd_effect(&cov_u, pa, response)?,
    };
    Ok(AsymptoticVariance { estimate, limit_covariance: limit, n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sem::{sample, true_covariance};
    use std::collections::BTreeSet;

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    fn six_node_pa() -> ParentAssignment {
        ParentAssignment::new(vec![1, 2], vec![set(&[5]), set(&[3, 4])]).unwrap()
    }

    #[test]
    fn gaussian_gamma_matches_large_sample() {
        let sem = fixtures::six_node_sem();
        let x = sample(&sem, 200_000, 9);
        let labels = [1, 2, 6];
        let s = true_covariance(&sem).submatrix(&labels).unwrap();
        let mut c = DMatrix::from_fn(x.nrows(), 3, |r, k| x[(r, labels[k] - 1)]);
        for k in 0..3 {
            let m = c.column(k).mean();
            c.column_mut(k).add_scalar_mut(-m);
        }
        let emp = vech_gamma(&c);
        let pop = gaussian_gamma(&s);
        let rel = (&emp - &pop).norm() / pop.norm();
        assert!(rel < 0.03, "relative error {rel}");
    }

    #[test]
    fn sample_and_population_limits_agree() {
        let sem = fixtures::six_node_sem();
        let pa = six_node_pa();
        let s = true_covariance(&sem).submatrix(&pa.variables(&[6])).unwrap();
        let x = sample(&sem, 100_000, 21);
        for method in [Method::Rrc, Method::Mcd] {
            let pop = limit_covariance(&s, &gaussian_gamma(&s), method, &pa, 6).unwrap();
            let est = asymptotic_variance(&x, method, &pa, 6).unwrap();
            let rel = (&est.limit_covariance - &pop).norm() / pop.norm();
            assert!(rel < 0.1, "{method}: relative error {rel}");
        }
    }

    #[test]
    fn limits_are_positive_semidefinite() {
        let sem = fixtures::six_node_sem();
        let pa = six_node_pa();
        let s = true_covariance(&sem).submatrix(&pa.variables(&[6])).unwrap();
        for method in [Method::Rrc, Method::Mcd] {
            let v = limit_covariance(&s, &gaussian_gamma(&s), method, &pa, 6).unwrap();
            assert!(v[(0, 0)] > 0.0 && v[(1, 1)] > 0.0);
            assert!(v[(0, 0)] * v[(1, 1)] >= v[(0, 1)] * v[(1, 0)]);
        }
    }

    #[test]
    fn separable_targets_are_uncorrelated() {
        // 1 → 3, 2 → 4; targets (1, 2), response 3
        let g = crate::graph::WeightedDag::new(4, &[(1, 3, 0.8), (2, 4, 0.5)]).unwrap();
        let s = true_covariance(&crate::LinearSem::gaussian(g));
        let pa = ParentAssignment::new(vec![1, 2], vec![set(&[]), set(&[])]).unwrap();
        let su = s.submatrix(&pa.variables(&[3])).unwrap();
        for method in [Method::Rrc, Method::Mcd] {
            let v = limit_covariance(&su, &gaussian_gamma(&su), method, &pa, 3).unwrap();
            assert!(v[(0, 1)].abs() < 1e-6, "{method}: {}", v[(0, 1)]);
        }
    }

    #[test]
    fn hypotheses_are_enforced() {
        let x = sample(&fixtures::six_node_sem(), 100, 1);
        let pa = ParentAssignment::new(vec![2, 4], vec![set(&[3, 4]), set(&[1, 3, 5])]).unwrap();
        assert!(matches!(asymptotic_variance(&x, Method::Rrc, &pa, 6), Err(Error::Hypothesis(_))));
        let pa = ParentAssignment::new(vec![1, 3], vec![set(&[5]), set(&[1])]).unwrap();
        assert!(matches!(asymptotic_variance(&x, Method::Mcd, &pa, 5), Err(Error::Hypothesis(_))));
        let pa = ParentAssignment::single(1, set(&[5])).unwrap();
        assert!(matches!(asymptotic_variance(&x, Method::Mcd, &pa, 6), Err(Error::Hypothesis(_))));
    }
}
