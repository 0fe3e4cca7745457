use num_complex::Complex;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Lower-triangular `L` with `M = L L^*` for Hermitian positive definite `M`.
pub fn cholesky<T: Real>(m: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let n = m.rows();
    let mut l = ComplexMatrix::<T>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "Cholesky: non-positive pivot {d} at {j}"
            )));
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex::new(djj, T::zero());
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L X = B` for lower-triangular `L`.
pub fn solve_lower<T: Real>(l: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let n = l.rows();
    let mut x = b.clone();
    for c in 0..b.cols() {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s = s - l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

/// Inverse of a lower-triangular matrix.
pub fn invert_lower<T: Real>(l: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    solve_lower(l, &ComplexMatrix::identity(l.rows()))
}

/// Real symmetric positive definite Cholesky factorization, row-major `n x n`.
/// Returns the lower factor in the same layout.
pub fn cholesky_real<T: Real>(a: &[T], n: usize) -> Result<Vec<T>> {
    let mut l = vec![T::zero(); n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "Cholesky: non-positive pivot {d} at {j}"
            )));
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L L^T x = b` given the factor from [`cholesky_real`].
pub fn cholesky_solve_real<T: Real>(l: &[T], n: usize, b: &[T]) -> Vec<T> {
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    y
}

#[cfg(test)]
fn is_lower_zero<T: Real>(m: &ComplexMatrix<T>) -> bool {
    use num_traits::Zero;
    (0..m.rows()).all(|i| (i + 1..m.cols()).all(|j| m[(i, j)].is_zero()))
}
