//! Small dense helpers shared by the estimators.

use nalgebra::{DMatrix, DVector};

/// Pivots below this fraction of the largest diagonal entry count as zero.
pub(crate) const PIVOT_TOL: f64 = 1e-10;

/// Failure of an `LDLᵀ` factorization at position `index`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PivotFailure {
    pub index: usize,
    pub pivot: f64,
}

/// `A = M D Mᵀ` with `M` unit lower triangular.
pub(crate) fn ldl(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>), PivotFailure> {
    let q = a.nrows();
    let scale = (0..q).map(|i| a[(i, i)].abs()).fold(0.0_f64, f64::max);
    let tol = PIVOT_TOL * scale.max(f64::MIN_POSITIVE);
    let mut m = DMatrix::<f64>::identity(q, q);
    let mut d = DVector::<f64>::zeros(q);
    for j in 0..q {
        let mut dj = a[(j, j)];
        for k in 0..j {
            dj -= m[(j, k)] * m[(j, k)] * d[k];
        }
        if !(dj > tol) {
            return Err(PivotFailure { index: j, pivot: dj });
        }
        d[j] = dj;
        for i in (j + 1)..q {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= m[(i, k)] * m[(j, k)] * d[k];
            }
            m[(i, j)] = s / dj;
        }
    }
    Ok((m, d))
}

/// Inverse of a unit lower-triangular matrix.
pub(crate) fn unit_lower_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let q = m.nrows();
    let mut inv = DMatrix::<f64>::identity(q, q);
    for col in 0..q {
        for i in (col + 1)..q {
            let mut s = 0.0;
            for k in col..i {
                s -= m[(i, k)] * inv[(k, col)];
            }
            inv[(i, col)] = s;
        }
    }
    inv
}

/// Solves `A x = b` for symmetric positive definite `A`.
pub(crate) fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>, PivotFailure> {
    let (m, d) = ldl(a)?;
    let q = a.nrows();
    let mut y = b.clone();
    for i in 0..q {
        for k in 0..i {
            y[i] -= m[(i, k)] * y[k];
        }
    }
    for i in 0..q {
        y[i] /= d[i];
    }
    for i in (0..q).rev() {
        for k in (i + 1)..q {
            y[i] -= m[(k, i)] * y[k];
        }
    }
    Ok(y)
}

/// Half-vectorization: the lower triangle stacked column by column.
pub(crate) fn vech(a: &DMatrix<f64>) -> DVector<f64> {
    let q = a.nrows();
    let mut out = Vec::with_capacity(q * (q + 1) / 2);
    for j in 0..q {
        for i in j..q {
            out.push(a[(i, j)]);
        }
    }
    DVector::from_vec(out)
}

/// Inverse of [`vech`] for symmetric matrices.
pub(crate) fn unvech(v: &DVector<f64>, q: usize) -> DMatrix<f64> {
    let mut a = DMatrix::<f64>::zeros(q, q);
    let mut idx = 0;
    for j in 0..q {
        for i in j..q {
            a[(i, j)] = v[idx];
            a[(j, i)] = v[idx];
            idx += 1;
        }
    }
    a
}

/// Position of entry `(i, j)` of a `q×q` symmetric matrix inside its vech.
pub(crate) fn vech_index(i: usize, j: usize, q: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    // columns 0..c contribute q, q-1, ..., q-c+1 entries
    c * q - c * c.saturating_sub(1) / 2 + (r - c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vech_index_matches_vech_layout() {
        for q in 1..7 {
            let mut a = DMatrix::<f64>::zeros(q, q);
            for i in 0..q {
                for j in 0..q {
                    a[(i, j)] = (10 * i.max(j) + i.min(j)) as f64;
                }
            }
            let v = vech(&a);
            for i in 0..q {
                for j in 0..q {
                    assert_eq!(v[vech_index(i, j, q)], a[(i, j)]);
                }
            }
            assert_eq!(unvech(&v, q), a);
        }
    }

    #[test]
    fn ldl_reconstructs_and_solves() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0]);
        let (m, d) = ldl(&a).unwrap();
        let rec = &m * DMatrix::from_diagonal(&d) * m.transpose();
        assert!((rec - &a).amax() < 1e-12);
        let inv = unit_lower_inverse(&m);
        assert!((&inv * &m - DMatrix::<f64>::identity(3, 3)).amax() < 1e-12);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let x = solve_spd(&a, &b).unwrap();
        assert!((&a * x - b).amax() < 1e-12);
    }

    #[test]
    fn ldl_rejects_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let err = ldl(&a).unwrap_err();
        assert_eq!(err.index, 1);
    }
}
