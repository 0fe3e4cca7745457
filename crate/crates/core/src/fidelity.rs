//! Fidelity `F(P, Q) = ‖√P √Q‖_1` computed in closed form and as the
//! one-dimensional-input case of the general diamond-norm program, whose dual
//! yields Alberti-type certificates.

use num_complex::Complex;
use num_traits::Zero;

use crate::dnorm::build_general_sdp;
use crate::error::{invalid, Error, Result};
use crate::linalg::{
    herm_eig, herm_eigvals, identity_kron, matrix_power_pd, matrix_sqrt_psd, partial_trace, vector_norm, ComplexMatrix,
    HermitianMatrix, TraceSide,
};
use crate::scalar::Real;
use crate::sdp::{solve, SdpOptions, SolveStatus};
use crate::superop::StinespringPair;

type Mat<T> = ComplexMatrix<T>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FidelityMethod {
    SdpPrimalDual,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityResult<T> {
    pub fidelity: T,
    pub fidelity_squared: T,
    pub method: FidelityMethod,
    /// Duality gap of the program; zero for the closed form.
    pub gap: T,
    /// Positive definite dual operator `Z` with `1 ⊗ Z ⪰ vv^*`, usable in
    /// [`check_alberti_certificate`].
    pub dual: Option<HermitianMatrix<T>>,
    pub status: Option<SolveStatus>,
}

fn require_psd<T: Real>(name: &str, m: &HermitianMatrix<T>) -> Result<()> {
    let vals = herm_eigvals(m)?;
    let scale = vals.iter().fold(T::one(), |acc, v| acc.max(v.abs()));
    let low = vals[vals.len() - 1];
    if low < -T::lit(T::tolerances().psd) * scale {
        return Err(Error::NotPsd {
            min_eigenvalue: low.to_f64_lossy(),
        });
    }
    if vals.iter().any(|v| !v.is_finite()) {
        return invalid(format!("{name} has non-finite entries"));
    }
    Ok(())
}

fn same_dim<T: Real>(p: &HermitianMatrix<T>, q: &HermitianMatrix<T>) -> Result<()> {
    if p.dim() != q.dim() {
        return invalid(format!("operators have dimensions {} and {}", p.dim(), q.dim()));
    }
    Ok(())
}

/// `Tr √(√P Q √P)`.
pub fn fidelity_closed_form<T: Real>(p: &HermitianMatrix<T>, q: &HermitianMatrix<T>) -> Result<T> {
    same_dim(p, q)?;
    require_psd("Q", q)?;
    let root = matrix_sqrt_psd(p)?;
    let inner = root.matmul(q.matrix()).matmul(root.matrix());
    let vals = herm_eigvals(&HermitianMatrix::from_hermitian_part(&inner))?;
    Ok(vals.into_iter().map(|v| v.max(T::zero()).sqrt()).sum())
}

impl<T: Real> FidelityResult<T> {
    pub fn closed_form(p: &HermitianMatrix<T>, q: &HermitianMatrix<T>) -> Result<Self> {
        let f = fidelity_closed_form(p, q)?;
        Ok(Self {
            fidelity: f,
            fidelity_squared: f * f,
            method: FidelityMethod::ClosedForm,
            gap: T::zero(),
            dual: None,
            status: None,
        })
    }
}

fn numerical_rank<T: Real>(vals: &[T]) -> usize {
    let top = vals.first().copied().unwrap_or_else(T::zero).max(T::zero());
    let cut = T::lit(T::tolerances().rank) * top;
    vals.iter().filter(|&&v| v > cut).count()
}

/// Purification `u = Σ_i √λ_i (e_i ⊗ z_i)` on `C^k ⊗ C^n` from the
/// eigendecomposition `P = Σ λ_i z_i z_i^*`, so `Tr_1(uu^*) = P`.
pub fn purify<T: Real>(p: &HermitianMatrix<T>, purification_dim: usize) -> Result<Vec<Complex<T>>> {
    require_psd("P", p)?;
    let es = herm_eig(p)?;
    let n = p.dim();
    let rank = numerical_rank(&es.values);
    if purification_dim < rank {
        return invalid(format!(
            "purification dimension {purification_dim} is below the rank {rank}"
        ));
    }
    let mut u = vec![Complex::zero(); purification_dim * n];
    for i in 0..rank.min(purification_dim) {
        let w = es.values[i].max(T::zero()).sqrt();
        for z in 0..n {
            u[i * n + z] = es.vectors[(z, i)] * w;
        }
    }
    Ok(u)
}

/// Fidelity of `Tr_1(uu^*)` and `Tr_1(vv^*)` for vectors on `C^k ⊗ C^n`,
/// as the square root of the optimum of the general program for the pair
/// `(u, v)` viewed as maps `C -> C^k ⊗ C^n`.
pub fn fidelity_from_purifications<T: Real>(
    u: &[Complex<T>],
    v: &[Complex<T>],
    purification_dim: usize,
    options: &SdpOptions,
) -> Result<FidelityResult<T>> {
    if purification_dim == 0 || u.len() != v.len() || !u.len().is_multiple_of(purification_dim) {
        return invalid("purifications must share a length divisible by the purification dimension");
    }
    let n = u.len() / purification_dim;
    if vector_norm(u).is_zero() || vector_norm(v).is_zero() {
        return Ok(FidelityResult {
            fidelity: T::zero(),
            fidelity_squared: T::zero(),
            method: FidelityMethod::SdpPrimalDual,
            gap: T::zero(),
            dual: None,
            status: None,
        });
    }
    // Solve for unit vectors and rescale: F² is bilinear in (‖u‖², ‖v‖²), so
    // the gap tolerance shrinks by the same factor to stay absolute on F².
    let (su, sv) = (vector_norm(u), vector_norm(v));
    let scale = su * su * sv * sv;
    let un: Vec<Complex<T>> = u.iter().map(|z| z / su).collect();
    let vn: Vec<Complex<T>> = v.iter().map(|z| z / sv).collect();
    // Degenerate fidelity programs stall near a relative gap of 1e-10.
    let floor = T::lit(1e6) * T::epsilon();
    let tighten = |tol: f64| {
        let tol = T::lit(tol);
        (tol / scale.max(T::one())).max(floor).min(tol).to_f64_lossy()
    };
    let opts = SdpOptions {
        gap_tol: tighten(options.gap_tol),
        ..*options
    };
    let pair = StinespringPair::new(Mat::column_vector(&un), Mat::column_vector(&vn), 1, purification_dim, n)?;
    let problem = build_general_sdp(&pair)?;
    let sol = solve(&problem, &opts)?;
    // The dual iterate is feasible to rounding while the primal one carries
    // the residual infeasibility, so the dual objective is the sharper value.
    let squared = sol.dual_value.max(T::zero()) * scale;
    let z = sol.dual.block(1);
    let norm = herm_eigvals(&HermitianMatrix::from_hermitian_part(z))?[0].abs();
    let dual = HermitianMatrix::from_hermitian_part(&(z + &Mat::identity(n).scale(T::lit(1e-12) * norm)));
    Ok(FidelityResult {
        fidelity: squared.sqrt(),
        fidelity_squared: squared,
        method: FidelityMethod::SdpPrimalDual,
        gap: sol.gap * scale,
        dual: Some(dual),
        status: Some(sol.status),
    })
}

/// Fidelity through the semidefinite program, with purifications built in
/// the elementary basis of `C^purification_dim`.
pub fn fidelity_sdp<T: Real>(
    p: &HermitianMatrix<T>,
    q: &HermitianMatrix<T>,
    purification_dim: usize,
    options: &SdpOptions,
) -> Result<FidelityResult<T>> {
    same_dim(p, q)?;
    let u = purify(p, purification_dim)?;
    let v = purify(q, purification_dim)?;
    fidelity_from_purifications(&u, &v, purification_dim, options)
}

/// `⟨P, Z⟩ ⟨Q, Z^{-1}⟩`, an upper bound on `F(P, Q)²` for positive definite `Z`.
pub fn check_alberti_certificate<T: Real>(
    p: &HermitianMatrix<T>,
    q: &HermitianMatrix<T>,
    z: &HermitianMatrix<T>,
) -> Result<T> {
    same_dim(p, q)?;
    if z.dim() != p.dim() {
        return invalid("Z must act on the same space as P and Q");
    }
    let inv = matrix_power_pd(z, -T::one()).map_err(|_| Error::InvalidInput("Z must be positive definite".into()))?;
    Ok(p.inner(z.matrix()).re * q.inner(inv.matrix()).re)
}

/// Both sides of the equivalence `1 ⊗ Z ⪰ vv^*  ⇔  ⟨Tr_1(vv^*), Z^{-1}⟩ ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropositionCheck<T> {
    /// `1 ⊗ Z ⪰ vv^*`.
    pub lhs: bool,
    /// `⟨Tr_1(vv^*), Z^{-1}⟩ ≤ 1`.
    pub rhs: bool,
    /// Least eigenvalue of `1 ⊗ Z - vv^*`.
    pub lhs_margin: T,
    /// `⟨Tr_1(vv^*), Z^{-1}⟩`.
    pub rhs_value: T,
}

/// Evaluates both sides for `v` on `C^k ⊗ C^n` and positive definite `Z` on
/// `C^n`. Comparisons allow a few ulps of roundoff.
pub fn check_proposition<T: Real>(v: &[Complex<T>], z: &HermitianMatrix<T>) -> Result<PropositionCheck<T>> {
    let n = z.dim();
    if v.is_empty() || !v.len().is_multiple_of(n) {
        return invalid(format!("vector length {} is not a multiple of {n}", v.len()));
    }
    let k = v.len() / n;
    let inv = matrix_power_pd(z, -T::one()).map_err(|_| Error::InvalidInput("Z must be positive definite".into()))?;
    let col = Mat::column_vector(v);
    let vv = col.mul_adjoint(&col);
    let cover = &identity_kron(k, z.matrix()) - &vv;
    let vals = herm_eigvals(&HermitianMatrix::from_hermitian_part(&cover))?;
    let margin = vals[vals.len() - 1];
    let reduced = partial_trace(&vv, TraceSide::First, (k, n))?;
    let rhs_value = reduced.inner(inv.matrix()).re;
    let z_norm = herm_eigvals(z)?[0].abs();
    let slack = T::epsilon() * T::lit(64.0);
    let scale = T::one().max(z_norm).max(vector_norm(v).powi(2));
    Ok(PropositionCheck {
        lhs: margin >= -slack * scale,
        rhs: rhs_value <= T::one() + slack * T::one().max(rhs_value),
        lhs_margin: margin,
        rhs_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type H = HermitianMatrix<f64>;
    type M = ComplexMatrix<f64>;

    fn unit(n: usize, i: usize) -> H {
        H::from_hermitian_part(&M::unit(n, n, i, i))
    }

    #[test]
    fn closed_form_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random::density::<f64, _>(&mut rng, 3);
        assert!((fidelity_closed_form(&rho, &rho).unwrap() - 1.0).abs() < 1e-10);
        assert!(fidelity_closed_form(&unit(2, 0), &unit(2, 1)).unwrap().abs() < 1e-12);
        let mixed = H::from_real_diag(&[0.5, 0.5]);
        let f = fidelity_closed_form(&unit(2, 0), &mixed).unwrap();
        // F(e e^*, σ)² = ⟨e, σ e⟩.
        assert!((f * f - 0.5).abs() < 1e-12);
        let p = random::psd::<f64, _>(&mut rng, 3, 2);
        let q = random::density::<f64, _>(&mut rng, 3);
        let fpq = fidelity_closed_form(&p, &q).unwrap();
        let fqp = fidelity_closed_form(&q, &p).unwrap();
        assert!((fpq - fqp).abs() < 1e-10);
    }

    #[test]
    fn purification_reduces_to_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random::psd::<f64, _>(&mut rng, 3, 2);
        let u = purify(&p, 2).unwrap();
        let col = M::column_vector(&u);
        let back = partial_trace(&col.mul_adjoint(&col), TraceSide::First, (2, 3)).unwrap();
        assert!(crate::linalg::frobenius_norm(&(&back - p.matrix())) < 1e-12);
        assert!(purify(&p, 1).is_err());
    }

    #[test]
    fn sdp_examples() {
        let opts = SdpOptions::default();
        let pure = unit(2, 0);
        let r = fidelity_sdp(&pure, &pure, 2, &opts).unwrap();
        assert!((r.fidelity - 1.0).abs() < 1e-7);
        let mixed = H::from_real_diag(&[0.5, 0.5]);
        let r = fidelity_sdp(&pure, &mixed, 2, &opts).unwrap();
        assert!((r.fidelity_squared - 0.5).abs() < 1e-7, "{r:?}");
        assert!((r.fidelity * r.fidelity - r.fidelity_squared).abs() < 1e-12);
    }

    #[test]
    fn alberti_examples() {
        let n = 3;
        let mixed = H::from_real_diag(&[1.0 / 3.0; 3]);
        let v = check_alberti_certificate(&mixed, &mixed, &H::identity(n)).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
        let singular = H::from_real_diag(&[1.0, 0.0, 1.0]);
        assert!(check_alberti_certificate(&mixed, &mixed, &singular).is_err());
    }

    #[test]
    fn proposition_examples() {
        let z = H::identity(2);
        let c = check_proposition(&[Complex::zero(); 4], &z).unwrap();
        assert!(c.lhs && c.rhs);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = random::unit_vector::<f64, _>(&mut rng, 4);
        let c = check_proposition(&v, &z).unwrap();
        assert!(c.lhs && c.rhs, "{c:?}");
    }
}
