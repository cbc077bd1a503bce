//! Small dense matrix helpers for the hardness reduction.
//!
//! Matrices are `Vec<Vec<F>>` in row-major order. Sizes stay tiny (graph
//! vertex counts), so cubic algorithms without pivoting tricks are fine;
//! Cholesky factorization doubles as the positive-definiteness check.

use crate::error::{Error, Result};
use crate::scalar::Real;

pub(crate) fn transpose<F: Real>(a: &[Vec<F>]) -> Vec<Vec<F>> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    (0..cols)
        .map(|j| (0..rows).map(|i| a[i][j]).collect())
        .collect()
}

pub(crate) fn matmul<F: Real>(a: &[Vec<F>], b: &[Vec<F>]) -> Vec<Vec<F>> {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            debug_assert_eq!(row.len(), inner);
            (0..cols)
                .map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

pub(crate) fn matvec<F: Real>(a: &[Vec<F>], x: &[F]) -> Vec<F> {
    a.iter()
        .map(|row| {
            debug_assert_eq!(row.len(), x.len());
            row.iter().zip(x).map(|(&r, &v)| r * v).sum()
        })
        .collect()
}

/// Lower-triangular `L` with `A = L·Lᵀ`; fails unless `A` is symmetric
/// positive definite.
pub(crate) fn cholesky<F: Real>(a: &[Vec<F>]) -> Result<Vec<Vec<F>>> {
    let n = a.len();
    if a.iter().any(|row| row.len() != n) {
        return Err(Error::invalid("matrix is not square"));
    }
    let mut l = vec![vec![F::zero(); n]; n];
    for j in 0..n {
        let mut diag = a[j][j];
        for k in 0..j {
            diag -= l[j][k] * l[j][k];
        }
        if !(diag > F::zero()) || !diag.is_finite() {
            return Err(Error::invalid("matrix is not positive definite"));
        }
        l[j][j] = diag.sqrt();
        for i in (j + 1)..n {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            l[i][j] = sum / l[j][j];
        }
    }
    Ok(l)
}

/// Solves `L·Lᵀ·x = b` given the Cholesky factor `L`.
pub(crate) fn cholesky_solve<F: Real>(l: &[Vec<F>], b: &[F]) -> Vec<F> {
    let n = l.len();
    debug_assert_eq!(b.len(), n);
    let mut y = vec![F::zero(); n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    let mut x = vec![F::zero(); n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    x
}

/// Inverse of `A = L·Lᵀ`, column by column.
pub(crate) fn cholesky_inverse<F: Real>(l: &[Vec<F>]) -> Vec<Vec<F>> {
    let n = l.len();
    let mut columns = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![F::zero(); n];
        e[j] = F::one();
        columns.push(cholesky_solve(l, &e));
    }
    transpose(&columns)
}

/// Inverse of a lower-triangular matrix by forward substitution, itself
/// lower triangular.
pub(crate) fn lower_triangular_inverse<F: Real>(l: &[Vec<F>]) -> Vec<Vec<F>> {
    let n = l.len();
    let mut inv = vec![vec![F::zero(); n]; n];
    for j in 0..n {
        inv[j][j] = F::one() / l[j][j];
        for i in (j + 1)..n {
            let mut sum = F::zero();
            for k in j..i {
                sum -= l[i][k] * inv[k][j];
            }
            inv[i][j] = sum / l[i][i];
        }
    }
    inv
}

/// Orthonormal basis of the hyperplane orthogonal to the all-ones vector,
/// as the rows of an `(n−1)×n` matrix: row `i` (1-based) carries `i` leading
/// entries `1/√(i(i+1))` followed by `−i/√(i(i+1))`.
pub(crate) fn ones_complement_basis<F: Real>(n: usize) -> Vec<Vec<F>> {
    (1..n)
        .map(|i| {
            let scale = F::one() / F::of((i * (i + 1)) as f64).sqrt();
            let mut row = vec![F::zero(); n];
            for entry in row.iter_mut().take(i) {
                *entry = scale;
            }
            row[i] = -F::of(i as f64) * scale;
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn matmul_and_transpose_hand_values() {
        let a = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]];
        let b = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        assert_eq!(matmul(&a, &b), vec![vec![4.0, 5.0], vec![10.0, 11.0]]);
        assert_eq!(
            transpose(&a),
            vec![vec![1.0, 4.0], vec![2.0, 5.0], vec![3.0, 6.0]]
        );
        assert_eq!(matvec(&a, &[1.0, 1.0, 1.0]), vec![6.0, 15.0]);
    }

    #[test]
    fn cholesky_reconstructs_and_solves() {
        let a = vec![
            vec![4.0, 2.0, 0.5],
            vec![2.0, 5.0, 1.0],
            vec![0.5, 1.0, 3.0],
        ];
        let l = cholesky(&a).unwrap();
        let reconstructed = matmul(&l, &transpose(&l));
        assert!(max_abs_diff(&a, &reconstructed) < 1e-12);

        let b = [1.0, -2.0, 0.5];
        let x = cholesky_solve(&l, &b);
        let back = matvec(&a, &x);
        for (lhs, rhs) in back.iter().zip(b) {
            assert!((lhs - rhs).abs() < 1e-12);
        }

        let inv = cholesky_inverse(&l);
        let identity = matmul(&a, &inv);
        for (i, row) in identity.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12, "entry ({i},{j}) = {v}");
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite_input() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(cholesky(&a).is_err());
        let singular = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(cholesky(&singular).is_err());
        let ragged = vec![vec![1.0, 0.0], vec![0.0]];
        assert!(cholesky(&ragged).is_err());
    }

    #[test]
    fn lower_triangular_inverse_matches_direct_solve() {
        let a: Vec<Vec<f64>> = vec![
            vec![4.0, 2.0, 0.5],
            vec![2.0, 5.0, 1.0],
            vec![0.5, 1.0, 3.0],
        ];
        let l = cholesky(&a).unwrap();
        let inv = lower_triangular_inverse(&l);
        let identity = matmul(&l, &inv);
        for (i, row) in identity.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12, "entry ({i},{j}) = {v}");
            }
        }
    }

    #[test]
    fn basis_rows_are_orthonormal_and_sum_free() {
        for n in 2..=8 {
            let r = ones_complement_basis::<f64>(n);
            assert_eq!(r.len(), n - 1);
            for (i, row) in r.iter().enumerate() {
                assert_eq!(row.len(), n);
                let sum: f64 = row.iter().sum();
                assert!(sum.abs() < 1e-12, "n={n} row {i} sums to {sum}");
                for (j, other) in r.iter().enumerate() {
                    let dot: f64 = row.iter().zip(other).map(|(a, b)| a * b).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-12, "n={n} rows {i},{j}: {dot}");
                }
            }
        }
    }
}
