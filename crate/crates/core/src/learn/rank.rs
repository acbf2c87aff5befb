use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cov::CovMatrix;
use crate::error::{Error, Result};

/// Largest tolerated fraction of tied observations per column.
pub const DEFAULT_TIE_FRACTION: f64 = 0.05;

/// Eigenvalue floor used by [`nearest_correlation`].
const EIGEN_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankKind {
    Spearman,
    Kendall,
}

impl fmt::Display for RankKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankKind::Spearman => "spearman",
            RankKind::Kendall => "kendall",
        })
    }
}

impl FromStr for RankKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spearman" => Ok(RankKind::Spearman),
            "kendall" => Ok(RankKind::Kendall),
            _ => Err(Error::InvalidArgument(format!("unknown rank correlation `{s}`"))),
        }
    }
}

/// A sin-transformed rank correlation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RankCorrelation {
    pub matrix: CovMatrix,
    /// Whether eigenvalues had to be raised to make the matrix positive definite.
    pub clipped: bool,
}

fn float_cmp(a: &f64, b: &f64) -> Ordering {
    a.partial_cmp(b).expect("data must not contain NaN")
}

/// Average ranks (1-based) of `col`.
fn average_ranks(col: &[f64]) -> Vec<f64> {
    let n = col.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| float_cmp(&col[a], &col[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && col[idx[end]] == col[idx[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

fn tie_fraction(col: &[f64]) -> f64 {
    let mut sorted = col.to_vec();
    sorted.sort_by(float_cmp);
    let tied = (0..sorted.len())
        .filter(|&i| (i > 0 && sorted[i - 1] == sorted[i]) || (i + 1 < sorted.len() && sorted[i + 1] == sorted[i]))
        .count();
    tied as f64 / sorted.len() as f64
}

/// Number of tied pairs within runs of equal values of an already sorted key.
fn tied_pairs<T, F: Fn(&T, &T) -> bool>(items: &[T], same: F) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in items.windows(2) {
        if same(&w[0], &w[1]) {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Merge sort that returns the number of strict inversions.
fn sort_counting_swaps(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_counting_swaps(&mut v[..mid], &mut buf[..mid]) + sort_counting_swaps(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Kendall's tau-b in `O(n log n)` (Knight's algorithm).
fn kendall_tau_b(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| float_cmp(&a.0, &b.0).then(float_cmp(&a.1, &b.1)));
    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let n1 = tied_pairs(&pairs, |a, b| a.0 == b.0);
    let n3 = tied_pairs(&pairs, |a, b| a == b);
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; n];
    let swaps = sort_counting_swaps(&mut ys, &mut buf);
    let n2 = tied_pairs(&ys, |a, b| a == b);
    let num = n0 as f64 - n1 as f64 - n2 as f64 + n3 as f64 - 2.0 * swaps as f64;
    let den = ((n0 - n1) as f64 * (n0 - n2) as f64).sqrt();
    num / den
}

fn pearson_of_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut c = m.clone();
    for j in 0..c.ncols() {
        let mean = c.column(j).mean();
        c.column_mut(j).add_scalar_mut(-mean);
    }
    let s = c.transpose() * &c / (n as f64 - 1.0);
    let d: Vec<f64> = (0..s.nrows()).map(|i| s[(i, i)].sqrt()).collect();
    DMatrix::from_fn(s.nrows(), s.ncols(), |r, k| if r == k { 1.0 } else { s[(r, k)] / (d[r] * d[k]) })
}

/// Pairwise Spearman or Kendall correlations mapped to the latent Gaussian
/// scale (`2 sin(πρ/6)` and `sin(πτ/2)`), projected to a positive definite
/// correlation matrix when needed.
pub fn rank_correlation_matrix(data: &DMatrix<f64>, kind: RankKind) -> Result<RankCorrelation> {
    let (n, p) = data.shape();
    if n < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 rows, got {n}")));
    }
    let columns: Vec<Vec<f64>> = (0..p).map(|c| data.column(c).iter().copied().collect()).collect();
    for (c, col) in columns.iter().enumerate() {
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("column {} has non-finite values", c + 1)));
        }
        let f = tie_fraction(col);
        if f > DEFAULT_TIE_FRACTION {
            return Err(Error::TooManyTies { column: c + 1, fraction: f });
        }
    }
    let raw = match kind {
        RankKind::Spearman => {
            let ranks: Vec<Vec<f64>> = columns.par_iter().map(|c| average_ranks(c)).collect();
            let m = DMatrix::from_fn(n, p, |r, c| ranks[c][r]);
            pearson_of_columns(&m).map(|r| 2.0 * (PI / 6.0 * r).sin())
        }
        RankKind::Kendall => {
            let pairs: Vec<(usize, usize)> = (0..p).flat_map(|a| ((a + 1)..p).map(move |b| (a, b))).collect();
            let taus: Vec<f64> = pairs.par_iter().map(|&(a, b)| kendall_tau_b(&columns[a], &columns[b])).collect();
            let mut m = DMatrix::<f64>::identity(p, p);
            for (&(a, b), tau) in pairs.iter().zip(taus) {
                let v = (PI / 2.0 * tau).sin();
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
            m
        }
    };
    let mut raw = raw;
    raw.fill_diagonal(1.0);
    let (matrix, clipped) = nearest_correlation(&raw);
    Ok(RankCorrelation { matrix: CovMatrix::from_matrix(matrix)?, clipped })
}

/// Raises eigenvalues below `1e-8` to `1e-8` and rescales to unit diagonal.
/// Returns the input unchanged (and `false`) when no eigenvalue is below the floor.
pub fn nearest_correlation(m: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    if eig.eigenvalues.min() >= EIGEN_FLOOR {
        return (sym, false);
    }
    let clipped = eig.eigenvalues.map(|v| v.max(EIGEN_FLOOR));
    let q = &eig.eigenvectors;
    let r = q * DMatrix::from_diagonal(&clipped) * q.transpose();
    let d: Vec<f64> = (0..r.nrows()).map(|i| r[(i, i)].sqrt()).collect();
    let out = DMatrix::from_fn(r.nrows(), r.ncols(), |a, b| if a == b { 1.0 } else { r[(a, b)] / (d[a] * d[b]) });
    ((&out + out.transpose()) * 0.5, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_tau_b(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let (mut conc, mut tx, mut ty) = (0.0, 0.0, 0.0);
        let mut pairs = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                pairs += 1.0;
                let dx = (x[i] - x[j]).signum() * if x[i] == x[j] { 0.0 } else { 1.0 };
                let dy = (y[i] - y[j]).signum() * if y[i] == y[j] { 0.0 } else { 1.0 };
                conc += dx * dy;
                if dx == 0.0 {
                    tx += 1.0;
                }
                if dy == 0.0 {
                    ty += 1.0;
                }
            }
        }
        conc / ((pairs - tx) * (pairs - ty) as f64).sqrt()
    }

    #[test]
    fn knight_matches_brute_force_with_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = rng.random_range(5..60);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64).collect();
            assert_abs_diff_eq!(kendall_tau_b(&x, &y), brute_tau_b(&x, &y), epsilon = 1e-12);
        }
    }

    #[test]
    fn average_ranks_handle_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn monotone_pair_gives_one() {
        let x = DMatrix::from_fn(50, 2, |r, c| if c == 0 { r as f64 } else { (r as f64).exp() });
        for kind in [RankKind::Spearman, RankKind::Kendall] {
            let rc = rank_correlation_matrix(&x, kind).unwrap();
            assert!(rc.clipped);
            assert_abs_diff_eq!(rc.matrix.values()[(0, 1)], 1.0, epsilon = 1e-7);
        }
    }

    #[test]
    fn independent_columns_are_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = DMatrix::from_fn(10_000, 3, |_, _| rng.random::<f64>());
        for kind in [RankKind::Spearman, RankKind::Kendall] {
            let rc = rank_correlation_matrix(&x, kind).unwrap();
            for a in 0..3 {
                for b in 0..a {
                    assert!(rc.matrix.values()[(a, b)].abs() < 0.05);
                }
            }
            assert!(!rc.clipped);
        }
    }

    #[test]
    fn heavy_ties_are_rejected() {
        let x = DMatrix::from_fn(100, 2, |r, c| if c == 0 { (r % 10) as f64 } else { r as f64 });
        assert!(matches!(
            rank_correlation_matrix(&x, RankKind::Spearman),
            Err(Error::TooManyTies { column: 1, .. })
        ));
    }

    #[test]
    fn indefinite_matrix_is_projected() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0]);
        let (fixed, clipped) = nearest_correlation(&m);
        assert!(clipped);
        assert!(SymmetricEigen::new(fixed.clone()).eigenvalues.min() > 0.0);
        for i in 0..3 {
            assert_eq!(fixed[(i, i)], 1.0);
        }
        let (same, clipped) = nearest_correlation(&DMatrix::identity(3, 3));
        assert!(!clipped);
        assert_eq!(same, DMatrix::identity(3, 3));
    }
}
