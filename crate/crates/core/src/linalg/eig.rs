//! Hermitian eigensolver: Householder reduction to real symmetric tridiagonal
//! form followed by the implicit QL iteration.

use num_complex::Complex;
use num_traits::{One, Zero};

use super::matrix::{ComplexMatrix, HermitianMatrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigenvalues sorted in descending order with orthonormal eigenvectors as
/// the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct Eigensystem<T> {
    pub values: Vec<T>,
    pub vectors: ComplexMatrix<T>,
}

impl<T: Real> Eigensystem<T> {
    /// `V f(Λ) V^*`.
    pub fn map_values(&self, f: impl Fn(T) -> T) -> ComplexMatrix<T> {
        let n = self.values.len();
        let fv: Vec<T> = self.values.iter().map(|&x| f(x)).collect();
        let mut scaled = self.vectors.clone();
        for i in 0..n {
            for j in 0..n {
                scaled[(i, j)] = scaled[(i, j)] * fv[j];
            }
        }
        scaled.mul_adjoint(&self.vectors)
    }

    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        self.map_values(|x| x)
    }

    pub fn max(&self) -> T {
        self.values.first().copied().unwrap_or_else(T::zero)
    }

    pub fn min(&self) -> T {
        self.values.last().copied().unwrap_or_else(T::zero)
    }
}

const MAX_QL_ITERATIONS: usize = 64;

/// Full eigendecomposition of a Hermitian matrix.
pub fn herm_eig<T: Real>(m: &HermitianMatrix<T>) -> Result<Eigensystem<T>> {
    let (values, vectors) = decompose(m.matrix(), true)?;
    Ok(Eigensystem {
        values,
        vectors: vectors.expect("vectors requested"),
    })
}

/// Eigenvalues only, descending.
pub fn herm_eigvals<T: Real>(m: &HermitianMatrix<T>) -> Result<Vec<T>> {
    Ok(decompose(m.matrix(), false)?.0)
}

fn decompose<T: Real>(m: &ComplexMatrix<T>, want_vectors: bool) -> Result<(Vec<T>, Option<ComplexMatrix<T>>)> {
    let n = m.rows();
    if n == 0 {
        return Ok((Vec::new(), want_vectors.then(|| ComplexMatrix::zeros(0, 0))));
    }
    if !m.is_finite() {
        return Err(Error::NumericalFailure("eigensolver input is not finite".into()));
    }
    let mut a = m.clone();
    let mut q = want_vectors.then(|| ComplexMatrix::<T>::identity(n));
    let sub = tridiagonalize(&mut a, q.as_mut());

    let mut d: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut e = vec![T::zero(); n];
    let mut phase = vec![Complex::<T>::one(); n];
    for i in 0..n.saturating_sub(1) {
        let mag = sub[i].norm();
        e[i] = mag;
        phase[i + 1] = if mag > T::zero() {
            phase[i] * (sub[i] / mag)
        } else {
            phase[i]
        };
    }

    let mut z = want_vectors.then(|| {
        let mut z = vec![T::zero(); n * n];
        for i in 0..n {
            z[i * n + i] = T::one();
        }
        z
    });
    implicit_ql(&mut d, &mut e, z.as_deref_mut(), n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap_or(std::cmp::Ordering::Equal));
    let values: Vec<T> = order.iter().map(|&i| d[i]).collect();

    let vectors = match (q, z) {
        (Some(q), Some(z)) => {
            // V = Q diag(phase) Z, columns permuted into descending order.
            let mut dz = ComplexMatrix::<T>::zeros(n, n);
            for i in 0..n {
                for (col, &src) in order.iter().enumerate() {
                    dz[(i, col)] = phase[i] * z[i * n + src];
                }
            }
            Some(q.matmul(&dz))
        }
        _ => None,
    };
    Ok((values, vectors))
}

/// Reduces `a` in place to Hermitian tridiagonal form, accumulating the
/// unitary into `q` when present. Returns the sub-diagonal entries.
fn tridiagonalize<T: Real>(a: &mut ComplexMatrix<T>, mut q: Option<&mut ComplexMatrix<T>>) -> Vec<Complex<T>> {
    let n = a.rows();
    let two = T::lit(2.0);
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let mut v: Vec<Complex<T>> = (0..len).map(|i| a[(k + 1 + i, k)]).collect();
        let xnorm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if xnorm == T::zero() {
            continue;
        }
        let x0 = v[0];
        let ph = if x0.norm() > T::zero() {
            x0 / x0.norm()
        } else {
            Complex::one()
        };
        let alpha = -ph * xnorm;
        v[0] = v[0] - alpha;
        let vnorm2: T = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == T::zero() {
            continue;
        }
        let beta = two / vnorm2;

        // p = beta * S v over the trailing block.
        let off = k + 1;
        let mut p = vec![Complex::<T>::zero(); len];
        for (i, pi) in p.iter_mut().enumerate() {
            let mut acc = Complex::zero();
            for (j, vj) in v.iter().enumerate() {
                acc = acc + a[(off + i, off + j)] * vj;
            }
            *pi = acc * beta;
        }
        let vp: Complex<T> = v.iter().zip(&p).map(|(vi, pi)| vi.conj() * pi).sum();
        let kk = vp.re * beta / two;
        let w: Vec<Complex<T>> = p.iter().zip(&v).map(|(pi, vi)| pi - vi * kk).collect();
        for i in 0..len {
            for j in 0..len {
                let upd = v[i] * w[j].conj() + w[i] * v[j].conj();
                a[(off + i, off + j)] = a[(off + i, off + j)] - upd;
            }
        }
        a[(off, k)] = alpha;
        a[(k, off)] = alpha.conj();
        for i in 1..len {
            a[(off + i, k)] = Complex::zero();
            a[(k, off + i)] = Complex::zero();
        }

        if let Some(q) = q.as_deref_mut() {
            for r in 0..n {
                let mut qv = Complex::zero();
                for (j, vj) in v.iter().enumerate() {
                    qv = qv + q[(r, off + j)] * vj;
                }
                qv = qv * beta;
                for (j, vj) in v.iter().enumerate() {
                    q[(r, off + j)] = q[(r, off + j)] - qv * vj.conj();
                }
            }
        }
    }
    (0..n.saturating_sub(1)).map(|i| a[(i + 1, i)]).collect()
}

/// Implicit QL on a real symmetric tridiagonal matrix with diagonal `d` and
/// sub-diagonal `e[0..n-1]` (`e[n-1]` must be zero). Eigenvectors are
/// accumulated into the row-major `z` when present.
fn implicit_ql<T: Real>(d: &mut [T], e: &mut [T], mut z: Option<&mut [T]>, n: usize) -> Result<()> {
    let eps = T::epsilon();
    let two = T::lit(2.0);
    let mut f = T::zero();
    let mut tst1 = T::zero();
    if n > 0 {
        e[n - 1] = T::zero();
    }
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::NumericalFailure(
                        "tridiagonal QL iteration did not converge".into(),
                    ));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        for k in 0..n {
                            let zk1 = z[k * n + i + 1];
                            let zk = z[k * n + i];
                            z[k * n + i + 1] = s * zk + c * zk1;
                            z[k * n + i] = c * zk - s * zk1;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius_norm, spectral_norm};

    fn herm(n: usize, seed: u64) -> HermitianMatrix<f64> {
        // Small deterministic pseudo-random Hermitian matrix.
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let m = ComplexMatrix::from_fn(n, n, |_, _| Complex::new(next(), next()));
        HermitianMatrix::from_hermitian_part(&m)
    }

    #[test]
    fn identity_and_diagonal() {
        let es = herm_eig(&HermitianMatrix::<f64>::identity(4)).unwrap();
        assert!(es.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let es = herm_eig(&HermitianMatrix::<f64>::from_real_diag(&[1.0, 2.0])).unwrap();
        assert_eq!(es.values, vec![2.0, 1.0]);
        assert!((es.vectors[(1, 0)].norm() - 1.0).abs() < 1e-15);
        assert!((es.vectors[(0, 1)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_reconstruction_and_orthonormality() {
        for (n, seed) in [(1, 1), (2, 2), (3, 3), (6, 4), (17, 5), (40, 6)] {
            let h = herm(n, seed);
            let es = herm_eig(&h).unwrap();
            let scale = spectral_norm(h.matrix()).unwrap().max(1e-300);
            let resid = frobenius_norm(&(&es.reconstruct() - h.matrix()));
            assert!(resid < 1e-12 * scale * n as f64, "n={n} resid={resid}");
            let gram = es.vectors.adjoint_mul(&es.vectors);
            let ortho = frobenius_norm(&(&gram - &ComplexMatrix::identity(n)));
            assert!(ortho < 1e-12 * n as f64, "n={n} ortho={ortho}");
            assert!(es.values.windows(2).all(|w| w[0] >= w[1]));
            let vals = herm_eigvals(&h).unwrap();
            for (a, b) in vals.iter().zip(&es.values) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn f32_decomposition() {
        let m = ComplexMatrix::<f32>::from_fn(3, 3, |i, j| {
            Complex::new(
                (i + j) as f32,
                if i < j {
                    1.0
                } else if i > j {
                    -1.0
                } else {
                    0.0
                },
            )
        });
        let h = HermitianMatrix::new(m).unwrap();
        let es = herm_eig(&h).unwrap();
        let resid = frobenius_norm(&(&es.reconstruct() - h.matrix()));
        assert!(resid < 1e-4);
    }
}
