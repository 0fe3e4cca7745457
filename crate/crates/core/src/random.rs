//! Seeded generators for random matrices, states and maps.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{matrix_power_pd, ComplexMatrix, HermitianMatrix};
use crate::scalar::Real;
use crate::superop::{StinespringPair, SuperOp};

/// Standard complex Gaussian entry (real and imaginary parts `N(0, 1/2)`).
pub fn complex_gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex::new(T::lit(re * s), T::lit(im * s))
}

pub fn gaussian_matrix<T: Real, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

pub fn unit_vector<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Complex<T>> {
    loop {
        let v: Vec<Complex<T>> = (0..n).map(|_| complex_gaussian(rng)).collect();
        let norm = crate::linalg::vector_norm(&v);
        if norm > T::lit(1e-6) {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

pub fn hermitian<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianMatrix<T> {
    HermitianMatrix::from_hermitian_part(&gaussian_matrix(rng, n, n))
}

/// Isometry `rows x cols` (`rows >= cols`) from the polar part of a Gaussian
/// matrix, Haar distributed.
pub fn isometry<T: Real, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix<T> {
    assert!(rows >= cols, "isometry needs rows >= cols");
    loop {
        let g = gaussian_matrix::<T, _>(rng, rows, cols);
        let gram = HermitianMatrix::from_hermitian_part(&g.adjoint_mul(&g));
        if let Ok(inv_sqrt) = matrix_power_pd(&gram, T::lit(-0.5)) {
            return g.matmul(inv_sqrt.matrix());
        }
    }
}

pub fn unitary<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix<T> {
    isometry(rng, n, n)
}

/// Positive semidefinite `G G^*` with `G` Gaussian `n x rank`.
pub fn psd<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> HermitianMatrix<T> {
    let g = gaussian_matrix::<T, _>(rng, n, rank);
    HermitianMatrix::from_hermitian_part(&g.mul_adjoint(&g))
}

/// Random density operator of full rank.
pub fn density<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianMatrix<T> {
    let p = psd::<T, _>(rng, n, n);
    let tr = p.trace_re();
    HermitianMatrix::from_hermitian_part(&p.scale(T::one() / tr))
}

/// Channel from a Haar-random Stinespring isometry `C^n -> C^m ⊗ C^env`.
/// Requires `m * env >= n`.
pub fn channel<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, env: usize) -> SuperOp<T> {
    let v = isometry::<T, _>(rng, m * env, n);
    let pair = StinespringPair::new(v.clone(), v, n, m, env).expect("isometry dimensions");
    SuperOp::from_stinespring(pair)
}

/// Completely positive map with `count` Gaussian Kraus operators.
pub fn cp_map<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, count: usize) -> SuperOp<T> {
    let kraus: Vec<ComplexMatrix<T>> = (0..count).map(|_| gaussian_matrix(rng, m, n)).collect();
    SuperOp::from_kraus(kraus).expect("consistent Kraus shapes")
}

/// General map with a Gaussian (non-Hermitian) Choi matrix.
pub fn map<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> SuperOp<T> {
    SuperOp::from_choi(n, m, gaussian_matrix(rng, m * n, m * n)).expect("square Choi matrix")
}
