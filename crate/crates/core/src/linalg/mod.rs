//! Dense complex linear algebra: matrices, factorizations, norms and the
//! tensor/partial-trace calculus.
//!
//! Tensor products follow one global convention: for `M ⊗ N` the left factor
//! is the slow index, so basis vector `e_a ⊗ e_b` sits at `a * dim(N) + b`.

mod chol;
mod eig;
mod matrix;
mod svd;

pub use chol::{cholesky, cholesky_real, cholesky_solve_real, invert_lower, solve_lower};
pub use eig::{herm_eig, herm_eigvals, Eigensystem};
pub use matrix::{ComplexMatrix, HermitianMatrix};
pub use svd::{singular_values, svd, Svd};

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Which tensor factor a partial trace removes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceSide {
    First,
    Second,
}

/// Sum of singular values.
pub fn trace_norm<T: Real>(m: &ComplexMatrix<T>) -> Result<T> {
    Ok(singular_values(m)?.into_iter().sum())
}

/// Largest singular value.
pub fn spectral_norm<T: Real>(m: &ComplexMatrix<T>) -> Result<T> {
    Ok(singular_values(m)?.first().copied().unwrap_or_else(T::zero))
}

pub fn frobenius_norm<T: Real>(m: &ComplexMatrix<T>) -> T {
    m.as_slice().iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

/// Spectral norm of a Hermitian matrix via its eigenvalues.
pub fn hermitian_spectral_norm<T: Real>(h: &HermitianMatrix<T>) -> Result<T> {
    let vals = herm_eigvals(h)?;
    Ok(vals
        .first()
        .map(|&a| a.abs().max(vals.last().map_or(T::zero(), |b| b.abs())))
        .unwrap_or_else(T::zero))
}

pub fn kron<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    ComplexMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Partial trace of `m` acting on a space with factor dimensions `dims`.
pub fn partial_trace<T: Real>(m: &ComplexMatrix<T>, side: TraceSide, dims: (usize, usize)) -> Result<ComplexMatrix<T>> {
    let (dy, dz) = dims;
    if m.rows() != dy * dz || m.cols() != dy * dz {
        return invalid(format!(
            "partial trace expects a {0}x{0} matrix for dims {dims:?}, got {1:?}",
            dy * dz,
            m.shape()
        ));
    }
    Ok(match side {
        TraceSide::First => ComplexMatrix::from_fn(dz, dz, |z, w| (0..dy).map(|y| m[(y * dz + z, y * dz + w)]).sum()),
        TraceSide::Second => ComplexMatrix::from_fn(dy, dy, |y, w| (0..dz).map(|z| m[(y * dz + z, w * dz + z)]).sum()),
    })
}

/// `1_n ⊗ m` without the generic Kronecker loop.
pub fn identity_kron<T: Real>(n: usize, m: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let (r, c) = m.shape();
    let mut out = ComplexMatrix::zeros(n * r, n * c);
    for k in 0..n {
        for i in 0..r {
            for j in 0..c {
                out[(k * r + i, k * c + j)] = m[(i, j)];
            }
        }
    }
    out
}

fn psd_floor<T: Real>(values: &[T]) -> T {
    let scale = values.iter().fold(T::one(), |acc, v| acc.max(v.abs()));
    -T::lit(T::tolerances().psd) * scale
}

/// Principal square root of a positive semidefinite matrix. Eigenvalues in
/// `[-psd_tol, 0)` (relative) are clamped to zero.
pub fn matrix_sqrt_psd<T: Real>(p: &HermitianMatrix<T>) -> Result<HermitianMatrix<T>> {
    let es = herm_eig(p)?;
    let min = es.min();
    if min < psd_floor(&es.values) {
        return Err(Error::NotPsd {
            min_eigenvalue: min.to_f64_lossy(),
        });
    }
    Ok(HermitianMatrix::from_hermitian_part(
        &es.map_values(|x| x.max(T::zero()).sqrt()),
    ))
}

/// `P^power` for a positive definite matrix (eigenvalues must be positive).
pub fn matrix_power_pd<T: Real>(p: &HermitianMatrix<T>, power: T) -> Result<HermitianMatrix<T>> {
    let es = herm_eig(p)?;
    if !(es.min() > T::zero()) {
        return Err(Error::NotPsd {
            min_eigenvalue: es.min().to_f64_lossy(),
        });
    }
    Ok(HermitianMatrix::from_hermitian_part(&es.map_values(|x| x.powf(power))))
}

/// Nearest positive semidefinite matrix in Frobenius distance (negative
/// eigenvalues set to zero).
pub fn psd_projection<T: Real>(h: &HermitianMatrix<T>) -> Result<HermitianMatrix<T>> {
    let es = herm_eig(h)?;
    Ok(HermitianMatrix::from_hermitian_part(
        &es.map_values(|x| x.max(T::zero())),
    ))
}

pub fn min_eigenvalue<T: Real>(h: &HermitianMatrix<T>) -> Result<T> {
    Ok(herm_eigvals(h)?.last().copied().unwrap_or_else(T::zero))
}

pub fn max_eigenvalue<T: Real>(h: &HermitianMatrix<T>) -> Result<T> {
    Ok(herm_eigvals(h)?.first().copied().unwrap_or_else(T::zero))
}

/// Euclidean norm of a vector.
pub fn vector_norm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}
