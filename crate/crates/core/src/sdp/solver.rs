//! Primal-dual interior-point method with Nesterov-Todd scaling and
//! Mehrotra predictor-corrector steps.
//!
//! The inequality `Ψ(X) ⪯ B` becomes `Ψ(X) + S = B` with a slack block `S`,
//! so the solver sees the standard pair
//!
//! ```text
//! minimize ⟨c, x⟩  s.t.  ⟨A_i, x⟩ = b_i,  x ⪰ 0
//! maximize bᵀy     s.t.  Σ y_i A_i + z = c,  z ⪰ 0
//! ```
//!
//! over the cone `Herm(var) ⊕ Herm(con)`, with `c = (-A, 0)` and one row
//! `A_i = (Ψ^*(E_i), E_i)` per basis element of the constraint space. The
//! dual variable of the original problem is the slack part of `z`.

use num_complex::Complex;
use num_traits::Zero;

use super::problem::{BlockMatrix, SdpProblem};
use crate::error::{invalid, Error, Result};
use crate::linalg::{
    cholesky, cholesky_real, cholesky_solve_real, herm_eigvals, invert_lower, svd, ComplexMatrix, HermitianMatrix,
};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    /// Relative duality gap at which to stop.
    pub gap_tol: f64,
    /// Relative primal and dual residual at which to stop.
    pub feas_tol: f64,
    pub max_iter: usize,
    /// Print one line per iteration to stderr.
    pub verbose: bool,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iter: 200,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::NumericalFailure => "numerical_failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution<T> {
    pub status: SolveStatus,
    /// Primal point `X`.
    pub primal: BlockMatrix<T>,
    /// Dual point `Y`.
    pub dual: BlockMatrix<T>,
    /// `⟨A, X⟩`.
    pub primal_value: T,
    /// `⟨B, Y⟩`.
    pub dual_value: T,
    /// `|dual_value - primal_value|`.
    pub gap: T,
    pub primal_infeas: T,
    pub dual_infeas: T,
    pub iterations: usize,
}

type Mat<T> = ComplexMatrix<T>;

const STEP_FRACTION: f64 = 0.98;

/// Nonzero entries `(p, q, value)` of one row restricted to one block.
type Entries<T> = Vec<(usize, usize, Complex<T>)>;

struct Cone<T> {
    dims: Vec<usize>,
    /// Per cone block: `(row index, entries)`.
    by_block: Vec<Vec<(usize, Entries<T>)>>,
    m: usize,
}

impl<T: Real> Cone<T> {
    fn new(problem: &SdpProblem<T>) -> Self {
        let nvar = problem.var_structure().len();
        let dims: Vec<usize> = problem
            .var_structure()
            .blocks()
            .iter()
            .chain(problem.con_structure().blocks())
            .copied()
            .collect();
        let mut by_block: Vec<Vec<(usize, Entries<T>)>> = vec![Vec::new(); dims.len()];
        for (i, row) in problem.rows().iter().enumerate() {
            let mut per: Vec<Entries<T>> = vec![Vec::new(); nvar];
            for &(b, p, q, v) in &row.adjoint {
                per[b].push((p, q, v));
            }
            for (b, entries) in per.into_iter().enumerate() {
                if !entries.is_empty() {
                    by_block[b].push((i, entries));
                }
            }
            by_block[nvar + row.con_block].push((i, row.basis.entries()));
        }
        Self {
            dims,
            by_block,
            m: problem.num_constraints(),
        }
    }

    fn nu(&self) -> T {
        T::from_usize(self.dims.iter().sum()).expect("dimension")
    }

    /// `(⟨A_i, x⟩)_i`.
    fn apply(&self, x: &[Mat<T>]) -> Vec<T> {
        let mut out = vec![T::zero(); self.m];
        for (k, rows) in self.by_block.iter().enumerate() {
            for (i, entries) in rows {
                out[*i] += entries.iter().map(|&(p, q, v)| (v.conj() * x[k][(p, q)]).re).sum::<T>();
            }
        }
        out
    }

    /// `Σ y_i A_i`.
    fn adjoint(&self, y: &[T]) -> Vec<Mat<T>> {
        let mut out: Vec<Mat<T>> = self.dims.iter().map(|&k| Mat::zeros(k, k)).collect();
        for (k, rows) in self.by_block.iter().enumerate() {
            for (i, entries) in rows {
                let c = y[*i];
                if c.is_zero() {
                    continue;
                }
                for &(p, q, v) in entries {
                    out[k][(p, q)] = out[k][(p, q)] + v * c;
                }
            }
        }
        out
    }

    /// Schur complement `M_ij = ⟨A_i, W A_j W⟩`, row-major.
    fn schur(&self, scalings: &[Scaling<T>]) -> Vec<T> {
        let m = self.m;
        let mut out = vec![T::zero(); m * m];
        for (k, rows) in self.by_block.iter().enumerate() {
            let w = &scalings[k].w;
            let dim = self.dims[k];
            for (j, entries) in rows {
                let t = if entries.len() <= dim {
                    // Sum of rank-one terms a W[:, s] W[t, :].
                    let mut t = Mat::zeros(dim, dim);
                    for &(s, u, a) in entries {
                        for p in 0..dim {
                            let left = w[(p, s)] * a;
                            if left.is_zero() {
                                continue;
                            }
                            for q in 0..dim {
                                t[(p, q)] = t[(p, q)] + left * w[(u, q)];
                            }
                        }
                    }
                    t
                } else {
                    let mut aw = Mat::zeros(dim, dim);
                    for &(s, u, a) in entries {
                        for q in 0..dim {
                            aw[(s, q)] = aw[(s, q)] + a * w[(u, q)];
                        }
                    }
                    w.matmul(&aw)
                };
                for (i, other) in rows {
                    let v: T = other.iter().map(|&(p, q, a)| (a.conj() * t[(p, q)]).re).sum();
                    out[i * m + j] += v;
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                let s = (out[i * m + j] + out[j * m + i]) * T::lit(0.5);
                out[i * m + j] = s;
                out[j * m + i] = s;
            }
        }
        out
    }
}

/// NT scaling of one block: `W = G G^*`, `G^{-1} x G^{-*} = G^* z G = Σ`.
struct Scaling<T> {
    x_chol_inv: Mat<T>,
    z_chol_inv: Mat<T>,
    g: Mat<T>,
    g_inv: Mat<T>,
    w: Mat<T>,
    sigma: Vec<T>,
}

impl<T: Real> Scaling<T> {
    fn new(x: &Mat<T>, z: &Mat<T>) -> Result<Self> {
        let l = cholesky(x)?;
        let r = cholesky(z)?;
        let dec = svd(&r.adjoint_mul(&l))?;
        let n = x.rows();
        if dec.values.iter().any(|&s| !(s > T::zero())) {
            return Err(Error::NumericalFailure("degenerate scaling point".into()));
        }
        let v = dec.right;
        let lv = l.matmul(&v);
        let g = Mat::from_fn(n, n, |i, j| lv[(i, j)] / dec.values[j].sqrt());
        let x_chol_inv = invert_lower(&l);
        let vt_linv = v.adjoint_mul(&x_chol_inv);
        let g_inv = Mat::from_fn(n, n, |i, j| vt_linv[(i, j)] * dec.values[i].sqrt());
        let w = g.mul_adjoint(&g).hermitian_part();
        Ok(Self {
            x_chol_inv,
            z_chol_inv: invert_lower(&r),
            g,
            g_inv,
            w,
            sigma: dec.values,
        })
    }
}

/// Largest `α` keeping `L L^* + α d` positive semidefinite, given `L^{-1}`.
fn max_step<T: Real>(chol_inv: &Mat<T>, d: &Mat<T>) -> Result<T> {
    let s = chol_inv.matmul(d).mul_adjoint(chol_inv);
    let vals = herm_eigvals(&HermitianMatrix::from_hermitian_part(&s))?;
    let low = vals[vals.len() - 1];
    Ok(if low >= T::zero() {
        T::infinity()
    } else {
        -T::one() / low
    })
}

fn step_length<T: Real>(chol_invs: &[&Mat<T>], ds: &[Mat<T>], fraction: T) -> Result<T> {
    let mut alpha = T::infinity();
    for (li, d) in chol_invs.iter().zip(ds) {
        alpha = alpha.min(max_step(li, d)?);
    }
    Ok(T::one().min(fraction * alpha))
}

fn frob_sq<T: Real>(ms: &[Mat<T>]) -> T {
    ms.iter()
        .map(|m| m.as_slice().iter().map(|z| z.norm_sqr()).sum::<T>())
        .sum()
}

fn inner<T: Real>(a: &[Mat<T>], b: &[Mat<T>]) -> T {
    a.iter().zip(b).map(|(x, y)| x.inner(y).re).sum()
}

struct Iterate<T> {
    x: Vec<Mat<T>>,
    y: Vec<T>,
    z: Vec<Mat<T>>,
}

struct Metrics<T> {
    primal_value: T,
    dual_value: T,
    gap: T,
    primal_infeas: T,
    dual_infeas: T,
}

impl<T: Real> Metrics<T> {
    fn merit(&self, opts: &SdpOptions) -> T {
        let rel = self.gap / (T::one() + self.primal_value.abs() + self.dual_value.abs());
        (rel / T::lit(opts.gap_tol))
            .max(self.primal_infeas / T::lit(opts.feas_tol))
            .max(self.dual_infeas / T::lit(opts.feas_tol))
    }

    fn converged(&self, opts: &SdpOptions) -> bool {
        self.merit(opts) <= T::one()
    }
}

/// Solves the problem from the infeasible start `x = z = τ I`, `Y = τ I`
/// with `τ = 1 + max(‖A‖, ‖B‖)`.
pub fn solve<T: Real>(problem: &SdpProblem<T>, options: &SdpOptions) -> Result<SdpSolution<T>> {
    if !(options.gap_tol > 0.0 && options.feas_tol > 0.0) {
        return invalid("tolerances must be positive");
    }
    let cone = Cone::new(problem);
    let nvar = problem.var_structure().len();
    let dims = cone.dims.clone();

    let c: Vec<Mat<T>> = problem
        .objective()
        .blocks()
        .iter()
        .map(|a| -a)
        .chain(problem.con_structure().blocks().iter().map(|&k| Mat::zeros(k, k)))
        .collect();
    let b: Vec<T> = problem
        .rows()
        .iter()
        .map(|row| row.basis.coordinate(problem.bound().block(row.con_block)))
        .collect();
    let b_norm = b.iter().map(|v| *v * *v).sum::<T>().sqrt();
    let c_norm = frob_sq(&c).sqrt();

    let tau = T::one()
        + problem
            .objective()
            .spectral_norm()?
            .max(problem.bound().spectral_norm()?);
    let mut it = Iterate {
        x: dims.iter().map(|&k| Mat::identity(k).scale(tau)).collect(),
        y: problem
            .rows()
            .iter()
            .map(|row| match row.basis {
                super::problem::HermBasis::Diag(_) => -tau,
                _ => T::zero(),
            })
            .collect(),
        z: dims.iter().map(|&k| Mat::identity(k).scale(tau)).collect(),
    };

    let evaluate = |it: &Iterate<T>| -> (Metrics<T>, Vec<T>, Vec<Mat<T>>) {
        let ax = cone.apply(&it.x);
        let rp: Vec<T> = b.iter().zip(&ax).map(|(bi, ai)| *bi - *ai).collect();
        let aty = cone.adjoint(&it.y);
        let rd: Vec<Mat<T>> = (0..dims.len()).map(|k| &(&c[k] - &it.z[k]) - &aty[k]).collect();
        let primal_value = -inner(&c[..nvar], &it.x[..nvar]);
        let dual_value: T = problem
            .bound()
            .blocks()
            .iter()
            .zip(&it.z[nvar..])
            .map(|(bb, z)| bb.inner(z).re)
            .sum();
        let metrics = Metrics {
            primal_value,
            dual_value,
            gap: (dual_value - primal_value).abs(),
            primal_infeas: rp.iter().map(|v| *v * *v).sum::<T>().sqrt() / (T::one() + b_norm),
            dual_infeas: frob_sq(&rd).sqrt() / (T::one() + c_norm),
        };
        (metrics, rp, rd)
    };

    let package = |it: &Iterate<T>, m: &Metrics<T>, status: SolveStatus, iterations: usize| SdpSolution {
        status,
        primal: BlockMatrix::from_blocks_unchecked(it.x[..nvar].iter().map(|x| x.hermitian_part()).collect()),
        dual: BlockMatrix::from_blocks_unchecked(it.z[nvar..].iter().map(|z| z.hermitian_part()).collect()),
        primal_value: m.primal_value,
        dual_value: m.dual_value,
        gap: m.gap,
        primal_infeas: m.primal_infeas,
        dual_infeas: m.dual_infeas,
        iterations,
    };

    let nu = cone.nu();
    let fraction = T::lit(STEP_FRACTION);
    let mut best: Option<(T, SdpSolution<T>)> = None;
    let remember = |best: &mut Option<(T, SdpSolution<T>)>, it: &Iterate<T>, m: &Metrics<T>, k: usize| {
        let merit = m.merit(options);
        if merit.is_finite() && best.as_ref().is_none_or(|(bm, _)| merit < *bm) {
            *best = Some((merit, package(it, m, SolveStatus::MaxIterations, k)));
        }
    };
    let finish = |best: Option<(T, SdpSolution<T>)>, status: SolveStatus, fallback: SdpSolution<T>| {
        let mut sol = best.map(|(_, s)| s).unwrap_or(fallback);
        sol.status = status;
        sol
    };

    for iter in 0..=options.max_iter {
        let (metrics, rp, rd) = evaluate(&it);
        let mu = inner(&it.x, &it.z) / nu;
        if options.verbose {
            eprintln!(
                "iter {iter:3}  primal {:+.10e}  dual {:+.10e}  gap {:.3e}  pinf {:.3e}  dinf {:.3e}  mu {:.3e}",
                metrics.primal_value.to_f64_lossy(),
                metrics.dual_value.to_f64_lossy(),
                metrics.gap.to_f64_lossy(),
                metrics.primal_infeas.to_f64_lossy(),
                metrics.dual_infeas.to_f64_lossy(),
                mu.to_f64_lossy()
            );
        }
        if metrics.converged(options) {
            return Ok(package(&it, &metrics, SolveStatus::Optimal, iter));
        }
        if !(metrics.merit(options).is_finite() && mu.is_finite()) {
            let fallback = package(&it, &metrics, SolveStatus::NumericalFailure, iter);
            return Ok(finish(best, SolveStatus::NumericalFailure, fallback));
        }
        remember(&mut best, &it, &metrics, iter);
        if iter == options.max_iter {
            let fallback = package(&it, &metrics, SolveStatus::MaxIterations, iter);
            return Ok(finish(best, SolveStatus::MaxIterations, fallback));
        }
        match newton_step(&cone, &mut it, &rp, &rd, mu, nu, fraction) {
            Ok(()) => {}
            Err(e) => {
                if options.verbose {
                    eprintln!("iter {iter:3}  step failed: {e}");
                }
                let fallback = package(&it, &metrics, SolveStatus::NumericalFailure, iter);
                return Ok(finish(best, SolveStatus::NumericalFailure, fallback));
            }
        }
    }
    unreachable!("loop returns on its last iteration")
}

fn factor_schur<T: Real>(mut m: Vec<T>, n: usize) -> Result<Vec<T>> {
    if let Ok(l) = cholesky_real(&m, n) {
        return Ok(l);
    }
    let diag_max = (0..n).fold(T::zero(), |acc, i| acc.max(m[i * n + i].abs()));
    let mut ridge = T::lit(1e-14) * diag_max.max(T::min_positive_value());
    for _ in 0..8 {
        for i in 0..n {
            m[i * n + i] += ridge;
        }
        if let Ok(l) = cholesky_real(&m, n) {
            return Ok(l);
        }
        ridge *= T::lit(100.0);
    }
    Err(Error::NumericalFailure(
        "Schur complement is not positive definite".into(),
    ))
}

#[allow(clippy::too_many_arguments)]
fn direction<T: Real>(
    cone: &Cone<T>,
    scalings: &[Scaling<T>],
    schur: &[T],
    rp: &[T],
    rd: &[Mat<T>],
    rc: &[Mat<T>],
) -> (Vec<Mat<T>>, Vec<T>, Vec<Mat<T>>) {
    let tmp: Vec<Mat<T>> = scalings
        .iter()
        .zip(rc.iter().zip(rd))
        .map(|(s, (c, d))| c - &s.w.matmul(d).matmul(&s.w))
        .collect();
    let atmp = cone.apply(&tmp);
    let rhs: Vec<T> = rp.iter().zip(&atmp).map(|(a, b)| *a - *b).collect();
    let dy = cholesky_solve_real(schur, cone.m, &rhs);
    let aty = cone.adjoint(&dy);
    let dz: Vec<Mat<T>> = rd.iter().zip(&aty).map(|(d, a)| (d - a).hermitian_part()).collect();
    let dx: Vec<Mat<T>> = scalings
        .iter()
        .zip(rc.iter().zip(&dz))
        .map(|(s, (c, z))| (c - &s.w.matmul(z).matmul(&s.w)).hermitian_part())
        .collect();
    (dx, dy, dz)
}

fn newton_step<T: Real>(
    cone: &Cone<T>,
    it: &mut Iterate<T>,
    rp: &[T],
    rd: &[Mat<T>],
    mu: T,
    nu: T,
    fraction: T,
) -> Result<()> {
    let scalings =
        it.x.iter()
            .zip(&it.z)
            .map(|(x, z)| Scaling::new(x, z))
            .collect::<Result<Vec<_>>>()?;
    let schur = factor_schur(cone.schur(&scalings), cone.m)?;
    let x_inv: Vec<&Mat<T>> = scalings.iter().map(|s| &s.x_chol_inv).collect();
    let z_inv: Vec<&Mat<T>> = scalings.iter().map(|s| &s.z_chol_inv).collect();

    // Predictor: target the complementarity x z = 0.
    let rc_aff: Vec<Mat<T>> = it.x.iter().map(|x| -x).collect();
    let (dx_a, _, dz_a) = direction(cone, &scalings, &schur, rp, rd, &rc_aff);
    let ap = step_length(&x_inv, &dx_a, T::one())?;
    let ad = step_length(&z_inv, &dz_a, T::one())?;
    let mut mu_aff = T::zero();
    for k in 0..it.x.len() {
        let xa = &it.x[k] + &dx_a[k].scale(ap);
        let za = &it.z[k] + &dz_a[k].scale(ad);
        mu_aff += xa.inner(&za).re;
    }
    mu_aff /= nu;
    let ratio = (mu_aff / mu).max(T::zero()).min(T::one());
    let sigma = ratio * ratio * ratio;

    // Corrector in the scaled space, where x and z both equal diag(Σ).
    let rc: Vec<Mat<T>> = scalings
        .iter()
        .zip(dx_a.iter().zip(&dz_a))
        .map(|(s, (dx, dz))| {
            let dxt = s.g_inv.matmul(dx).mul_adjoint(&s.g_inv);
            let dzt = s.g.adjoint_mul(dz).matmul(&s.g);
            let cross = &dxt.matmul(&dzt) + &dzt.matmul(&dxt);
            let n = s.sigma.len();
            let u = Mat::from_fn(n, n, |i, j| {
                let mut r = -cross[(i, j)] * T::lit(0.5);
                if i == j {
                    r = r + Complex::new(sigma * mu - s.sigma[i] * s.sigma[i], T::zero());
                }
                r * (T::lit(2.0) / (s.sigma[i] + s.sigma[j]))
            });
            s.g.matmul(&u).mul_adjoint(&s.g)
        })
        .collect();
    let (dx, dy, dz) = direction(cone, &scalings, &schur, rp, rd, &rc);
    let ap = step_length(&x_inv, &dx, fraction)?;
    let ad = step_length(&z_inv, &dz, fraction)?;

    for k in 0..it.x.len() {
        it.x[k] = (&it.x[k] + &dx[k].scale(ap)).hermitian_part();
        it.z[k] = (&it.z[k] + &dz[k].scale(ad)).hermitian_part();
    }
    for (y, d) in it.y.iter_mut().zip(&dy) {
        *y += ad * *d;
    }
    if it.x.iter().chain(&it.z).any(|m| !m.is_finite()) || it.y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("non-finite iterate".into()));
    }
    Ok(())
}
