//! Singular value decomposition by one-sided (Hestenes) Jacobi rotations.

use num_complex::Complex;
use num_traits::Zero;

use super::matrix::ComplexMatrix;
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// `M = left * diag(values) * right^*` with `k = min(rows, cols)` columns in
/// `left` and `right`. Columns paired with a zero singular value are zero.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub values: Vec<T>,
    pub left: ComplexMatrix<T>,
    pub right: ComplexMatrix<T>,
}

const MAX_SWEEPS: usize = 80;

pub fn svd<T: Real>(m: &ComplexMatrix<T>) -> Result<Svd<T>> {
    if !m.is_finite() {
        return invalid("matrix has non-finite entries");
    }
    if m.rows() >= m.cols() {
        jacobi(m)
    } else {
        let s = jacobi(&m.adjoint())?;
        Ok(Svd {
            values: s.values,
            left: s.right,
            right: s.left,
        })
    }
}

/// Singular values only, descending.
pub fn singular_values<T: Real>(m: &ComplexMatrix<T>) -> Result<Vec<T>> {
    Ok(svd(m)?.values)
}

fn jacobi<T: Real>(m: &ComplexMatrix<T>) -> Result<Svd<T>> {
    let (rows, cols) = m.shape();
    // Work column-major so rotations touch contiguous memory.
    let mut u: Vec<Vec<Complex<T>>> = (0..cols).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<Complex<T>>> = (0..cols)
        .map(|j| {
            let mut e = vec![Complex::zero(); cols];
            e[j] = Complex::new(T::one(), T::zero());
            e
        })
        .collect();
    // Rounding in the inner products grows with the column length.
    let eps = T::epsilon() * T::lit(rows.max(1) as f64).sqrt();
    let two = T::lit(2.0);

    let mut converged = cols < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: T = u[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: T = u[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex<T> = u[p].iter().zip(&u[q]).map(|(a, b)| a.conj() * b).sum();
                let g = gamma.norm();
                if g == T::zero() || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let ph = (gamma / g).conj();
                let zeta = (beta - alpha) / (two * g);
                let sign = if zeta >= T::zero() { T::one() } else { -T::one() };
                let t = sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut u, p, q, ph, c, s);
                rotate(&mut v, p, q, ph, c, s);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NumericalFailure("Jacobi SVD did not converge".into()));
    }

    let norms: Vec<T> = u
        .iter()
        .map(|col| col.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));

    let mut left = ComplexMatrix::zeros(rows, cols);
    let mut right = ComplexMatrix::zeros(cols, cols);
    let mut values = Vec::with_capacity(cols);
    for (k, &j) in order.iter().enumerate() {
        let sigma = norms[j];
        values.push(sigma);
        if sigma > T::zero() {
            let col: Vec<Complex<T>> = u[j].iter().map(|z| z / sigma).collect();
            left.set_column(k, &col);
        }
        right.set_column(k, &v[j]);
    }
    Ok(Svd { values, left, right })
}

/// Applies the unitary column rotation that orthogonalizes columns p and q.
/// Column q is first multiplied by `ph` so that the pairing is real.
fn rotate<T: Real>(cols: &mut [Vec<Complex<T>>], p: usize, q: usize, ph: Complex<T>, c: T, s: T) {
    let (head, tail) = cols.split_at_mut(q);
    let cp = &mut head[p];
    let cq = &mut tail[0];
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let bq = *b * ph;
        let na = *a * c - bq * s;
        let nb = *a * s + bq * c;
        *a = na;
        *b = nb;
    }
}
