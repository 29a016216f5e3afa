//! Small dense linear-algebra helpers for the model-fitting code.
//!
//! The design matrices in this crate are tiny (a handful of columns), so a
//! plain Cholesky factorisation of the normal equations is all that is
//! needed. Matrices are stored row-major in flat vectors.

use crate::scalar::Scalar;

/// Symmetric positive-definite solve of `A x = b` via Cholesky, `A` row-major
/// `n x n`. Returns `None` when the factorisation breaks down (singular or
/// indefinite matrix).
pub fn solve_spd<T: Scalar>(a: &[T], b: &[T], n: usize) -> Option<Vec<T>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let chol = cholesky(a, n)?;
    Some(chol_solve(&chol, b, n))
}

/// Lower-triangular Cholesky factor of a row-major SPD matrix.
pub fn cholesky<T: Scalar>(a: &[T], n: usize) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum = sum - l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= T::zero() || !sum.is_finite() {
                    return None;
                }
                l[i * n + j] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn chol_solve<T: Scalar>(l: &[T], b: &[T], n: usize) -> Vec<T> {
    // forward substitution L y = b
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum = sum - l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    // back substitution L' x = y
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum = sum - l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    x
}

/// Inverse of an SPD matrix from its Cholesky factor, column by column.
pub fn spd_inverse<T: Scalar>(a: &[T], n: usize) -> Option<Vec<T>> {
    let l = cholesky(a, n)?;
    let mut inv = vec![T::zero(); n * n];
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e[j] = T::one();
        let col = chol_solve(&l, &e, n);
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
        e[j] = T::zero();
    }
    Some(inv)
}

/// Least squares `argmin ||X beta - y||` through the normal equations with a
/// small ridge fallback when the Gram matrix is singular. `x` is row-major
/// `rows x cols`.
pub fn lstsq<T: Scalar>(x: &[T], y: &[T], rows: usize, cols: usize) -> Option<Vec<T>> {
    debug_assert_eq!(x.len(), rows * cols);
    debug_assert_eq!(y.len(), rows);
    let mut gram = vec![T::zero(); cols * cols];
    let mut rhs = vec![T::zero(); cols];
    for r in 0..rows {
        let row = &x[r * cols..(r + 1) * cols];
        for i in 0..cols {
            rhs[i] += row[i] * y[r];
            for j in 0..=i {
                gram[i * cols + j] = gram[i * cols + j] + row[i] * row[j];
            }
        }
    }
    for i in 0..cols {
        for j in i + 1..cols {
            gram[i * cols + j] = gram[j * cols + i];
        }
    }
    solve_spd(&gram, &rhs, cols).or_else(|| {
        let ridge = T::from_f64_lossy(1e-8);
        let scale = (0..cols)
            .map(|i| gram[i * cols + i])
            .fold(T::zero(), |a, b| a.max(b));
        let mut damped = gram.clone();
        for i in 0..cols {
            damped[i * cols + i] = damped[i * cols + i] + ridge * scale.max(T::one());
        }
        solve_spd(&damped, &rhs, cols)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_identity() {
        let a = vec![1.0f64, 0.0, 0.0, 1.0];
        let b = vec![3.0f64, -2.0];
        let x = solve_spd(&a, &b, 2).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-12 && (x[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn solves_spd_3x3() {
        // A = M'M + I for a random-ish M keeps it SPD.
        let a = vec![4.0f64, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let x_true = [1.0f64, -2.0, 0.5];
        let mut b = vec![0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                b[i] += a[i * 3 + j] * x_true[j];
            }
        }
        let x = solve_spd(&a, &b, 3).unwrap();
        for i in 0..3 {
            assert!((x[i] - x_true[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_singular() {
        let a = vec![1.0, 1.0, 1.0, 1.0];
        assert!(solve_spd(&a, &[1.0, 1.0], 2).is_none());
    }

    #[test]
    fn inverse_matches_solve() {
        let a = vec![4.0f64, 2.0, 2.0, 5.0];
        let inv = spd_inverse(&a, 2).unwrap();
        // A * inv == I
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for k in 0..2 {
                    s += a[i * 2 + k] * inv[k * 2 + j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lstsq_recovers_line() {
        let rows = 50;
        let mut x = Vec::new();
        let mut y = Vec::new();
        for r in 0..rows {
            let t = r as f64 / 10.0;
            x.extend_from_slice(&[1.0, t]);
            y.push(2.0 + 3.0 * t);
        }
        let beta = lstsq(&x, &y, rows, 2).unwrap();
        assert!((beta[0] - 2.0).abs() < 1e-9 && (beta[1] - 3.0).abs() < 1e-9);
    }
}
