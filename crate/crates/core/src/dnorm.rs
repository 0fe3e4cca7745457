//! Diamond norm and completely bounded spectral norm through semidefinite
//! programming, with certificates that can be checked without a solver.
//!
//! Two programs are available. The general one works from a Stinespring pair
//! `(A, B)` of any map and has optimal value `‖Φ‖_◇²`. The channel-difference
//! one works from `J(Φ₀ - Φ₁)` and has optimal value `½‖Φ₀ - Φ₁‖_◇`.

use crate::error::{invalid, Error, Result};
use crate::linalg::{
    frobenius_norm, herm_eig, herm_eigvals, identity_kron, matrix_power_pd, partial_trace, psd_projection,
    spectral_norm, ComplexMatrix, HermitianMatrix, TraceSide,
};
use crate::scalar::Real;
use crate::sdp::{solve, BlockMatrix, BlockStructure, SdpOptions, SdpProblem, SolveStatus};
use crate::superop::{stinespring_residual, Representation, StinespringPair, SuperOp};

type Mat<T> = ComplexMatrix<T>;

/// Which program produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    GeneralSdp,
    ChannelDiffSdp,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::GeneralSdp => "general_sdp",
            Method::ChannelDiffSdp => "channel_diff_sdp",
        }
    }
}

/// Program selection for [`diamond_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MethodChoice {
    /// Channel-difference program for channel pairs, general otherwise.
    #[default]
    Auto,
    General,
    ChannelDiff,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions {
    pub method: MethodChoice,
    pub sdp: SdpOptions,
    /// Relative threshold for the rank of the Choi matrix.
    pub rank_tol: f64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            method: MethodChoice::Auto,
            sdp: SdpOptions::default(),
            rank_tol: 1e-9,
        }
    }
}

/// Primal and dual witnesses for a norm value.
#[derive(Debug, Clone, PartialEq)]
pub enum NormCertificate<T> {
    /// Witnesses for the general program on `pair`.
    General {
        /// Density operator on the input space.
        rho: Mat<T>,
        /// PSD operator on `Y ⊗ Z`.
        w: Mat<T>,
        lambda: T,
        /// PSD operator on the environment `Z`.
        z: Mat<T>,
        pair: StinespringPair<T>,
    },
    /// Witnesses for the channel-difference program.
    ChannelDiff {
        /// Density operator on the input space.
        rho: Mat<T>,
        /// PSD operator on `Y ⊗ X`.
        w: Mat<T>,
        /// PSD operator on `Y ⊗ X`.
        z: Mat<T>,
    },
}

impl<T: Real> NormCertificate<T> {
    pub fn method(&self) -> Method {
        match self {
            NormCertificate::General { .. } => Method::GeneralSdp,
            NormCertificate::ChannelDiff { .. } => Method::ChannelDiffSdp,
        }
    }

    /// Trivial certificate for the zero map `L(C^n) -> L(C^m)`.
    pub fn zero_map(dim_in: usize, dim_out: usize) -> Self {
        let pair = StinespringPair::new(
            Mat::zeros(dim_out, dim_in),
            Mat::zeros(dim_out, dim_in),
            dim_in,
            dim_out,
            1,
        )
        .expect("zero pair shape");
        NormCertificate::General {
            rho: Mat::identity(dim_in).scale(T::one() / T::from_usize(dim_in).expect("dimension")),
            w: Mat::zeros(dim_out, dim_out),
            lambda: T::zero(),
            z: Mat::zeros(1, 1),
            pair,
        }
    }
}

/// Solver outcome carried alongside a norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverStats<T> {
    pub status: SolveStatus,
    pub iterations: usize,
    pub primal_value: T,
    pub dual_value: T,
    pub gap: T,
    pub primal_infeas: T,
    pub dual_infeas: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormResult<T> {
    pub value: T,
    /// Bound recomputed from the primal witness.
    pub lower_bound: T,
    /// Bound recomputed from the dual witness.
    pub upper_bound: T,
    pub method: Method,
    pub certificate: NormCertificate<T>,
    /// `None` when no program had to be solved (zero map).
    pub solver: Option<SolverStats<T>>,
    pub warnings: Vec<String>,
}

impl<T: Real> NormResult<T> {
    pub fn is_optimal(&self) -> bool {
        self.solver.is_none_or(|s| s.status == SolveStatus::Optimal)
    }
}

/// Outcome of [`verify_certificate`].
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateCheck<T> {
    pub valid: bool,
    pub lower: T,
    pub upper: T,
    pub violations: Vec<String>,
}

fn herm<T: Real>(m: &Mat<T>) -> HermitianMatrix<T> {
    HermitianMatrix::from_hermitian_part(m)
}

fn eig_range<T: Real>(m: &Mat<T>) -> Result<(T, T)> {
    let vals = herm_eigvals(&herm(m))?;
    Ok((vals[vals.len() - 1], vals[0]))
}

fn dim_lit<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("dimension")
}

/// The general program for a Stinespring pair `A, B: X -> Y ⊗ Z`:
///
/// ```text
/// maximize ⟨BB^*, W⟩ subject to Tr ρ ≤ 1, Tr_Y W ⪯ Tr_Y(AρA^*), ρ, W ⪰ 0
/// minimize λ        subject to λ1 ⪰ A^*(1⊗Z)A, 1⊗Z ⪰ BB^*, λ, Z ⪰ 0
/// ```
///
/// Variable blocks are `[n, m·r]` (ρ, W); constraint blocks `[1, r]` (λ, Z).
pub fn build_general_sdp<T: Real>(pair: &StinespringPair<T>) -> Result<SdpProblem<T>> {
    let (n, m, r) = (pair.dim_in(), pair.dim_out(), pair.dim_env());
    let a = pair.a().clone();
    let a2 = a.clone();
    let bb = pair.b().mul_adjoint(pair.b());
    let var = BlockStructure::new(vec![n, m * r])?;
    let con = BlockStructure::new(vec![1, r])?;
    let objective = BlockMatrix::new(vec![Mat::zeros(n, n), bb])?;
    let bound = BlockMatrix::new(vec![Mat::identity(1), Mat::zeros(r, r)])?;
    SdpProblem::new(
        var,
        con,
        move |x: &BlockMatrix<T>| {
            let rho = x.block(0);
            let w = x.block(1);
            let arho = a.matmul(rho).mul_adjoint(&a);
            let diff = &partial_trace(w, TraceSide::First, (m, r))? - &partial_trace(&arho, TraceSide::First, (m, r))?;
            BlockMatrix::new(vec![Mat::from_diag(&[rho.trace()]), diff.hermitian_part()])
        },
        move |y: &BlockMatrix<T>| {
            let lambda = y.block(0)[(0, 0)].re;
            let lifted = identity_kron(m, y.block(1));
            let pulled = a2.adjoint_mul(&lifted).matmul(&a2);
            BlockMatrix::new(vec![
                (&Mat::identity(n).scale(lambda) - &pulled).hermitian_part(),
                lifted,
            ])
        },
        objective,
        bound,
    )
}

/// The channel-difference program for `Φ₀ - Φ₁` with Choi matrix `J`:
///
/// ```text
/// maximize ⟨J, W⟩       subject to W ⪯ 1_Y ⊗ ρ, Tr ρ ≤ 1, W, ρ ⪰ 0
/// minimize ‖Tr_Y Z‖     subject to Z ⪰ J, Z ⪰ 0
/// ```
///
/// Variable blocks are `[m·n, n]` (W, ρ); constraint blocks `[m·n, 1]`.
pub fn build_channel_diff_sdp<T: Real>(first: &SuperOp<T>, second: &SuperOp<T>) -> Result<SdpProblem<T>> {
    if first.dims() != second.dims() {
        return invalid(format!(
            "channel dimensions differ: {:?} vs {:?}",
            first.dims(),
            second.dims()
        ));
    }
    for (name, op) in [("first", first), ("second", second)] {
        if !op.is_channel()?.is_channel() {
            return invalid(format!("{name} operand is not a channel"));
        }
    }
    let (n, m) = first.dims();
    let j = (&first.to_choi() - &second.to_choi()).hermitian_part();
    let var = BlockStructure::new(vec![m * n, n])?;
    let con = BlockStructure::new(vec![m * n, 1])?;
    let objective = BlockMatrix::new(vec![j, Mat::zeros(n, n)])?;
    let bound = BlockMatrix::new(vec![Mat::zeros(m * n, m * n), Mat::identity(1)])?;
    SdpProblem::new(
        var,
        con,
        move |x: &BlockMatrix<T>| {
            let w = x.block(0);
            let rho = x.block(1);
            BlockMatrix::new(vec![w - &identity_kron(m, rho), Mat::from_diag(&[rho.trace()])])
        },
        move |y: &BlockMatrix<T>| {
            let z = y.block(0);
            let lambda = y.block(1)[(0, 0)].re;
            let reduced = partial_trace(z, TraceSide::First, (m, n))?;
            BlockMatrix::new(vec![
                z.clone(),
                (&Mat::identity(n).scale(lambda) - &reduced).hermitian_part(),
            ])
        },
        objective,
        bound,
    )
}

/// Density operator closest in spirit to `rho`: PSD part, unit trace, or the
/// maximally mixed state if nothing is left.
fn normalize_density<T: Real>(rho: &Mat<T>) -> Result<Mat<T>> {
    let n = rho.rows();
    let p = psd_projection(&herm(rho))?.into_matrix();
    let tr = p.trace().re;
    Ok(if tr > T::zero() && tr.is_finite() {
        p.scale(T::one() / tr)
    } else {
        Mat::identity(n).scale(T::one() / dim_lit(n))
    })
}

/// Mixing weight `η = k / (1 + k)` so that `(1-η) viol ≤ η floor`.
fn mixing_weight<T: Real>(viol: T, floor: T) -> T {
    if viol <= T::zero() {
        return T::zero();
    }
    if !(floor > T::zero()) {
        return T::one();
    }
    mixing_weight_ratio(viol / floor)
}

fn mixing_weight_ratio<T: Real>(k: T) -> T {
    if k.is_infinite() {
        return T::one();
    }
    (k / (T::one() + k)).min(T::one())
}

/// Smallest `k ≥ 0` with `excess ⪯ k·floor`, or `None` if `floor` is not
/// positive definite.
fn relative_excess<T: Real>(excess: &Mat<T>, floor: &Mat<T>) -> Result<Option<T>> {
    let Ok(root) = matrix_power_pd(&herm(floor), -T::lit(0.5)) else {
        return Ok(None);
    };
    let whitened = root.matmul(excess).matmul(root.matrix());
    let (_, top) = eig_range(&whitened)?;
    Ok(Some(top.max(T::zero())))
}

/// Makes the general primal witness exactly feasible. Two moves are tried
/// and the cheaper one kept: mixing `(ρ, W)` towards `(1/n, 0)`, or shrinking
/// `W` alone. Either way the objective drops by the factor `1/(1+k)`.
fn repair_general_primal<T: Real>(pair: &StinespringPair<T>, rho: &Mat<T>, w: &Mat<T>) -> Result<(Mat<T>, Mat<T>)> {
    let (n, m, r) = (pair.dim_in(), pair.dim_out(), pair.dim_env());
    let rho = normalize_density(rho)?;
    let w = psd_projection(&herm(w))?.into_matrix();
    let a = pair.a();
    let lhs = partial_trace(&w, TraceSide::First, (m, r))?;
    let rhs = partial_trace(&a.matmul(&rho).mul_adjoint(a), TraceSide::First, (m, r))?;
    let excess = &lhs - &rhs;
    let (_, top) = eig_range(&excess)?;
    if top <= T::zero() {
        return Ok((rho, w));
    }
    // Tr_Y(A (1/n) A^*) is positive definite for a minimal pair.
    let mixed_floor = partial_trace(&a.mul_adjoint(a), TraceSide::First, (m, r))?.scale(T::one() / dim_lit(n));
    let mix = match relative_excess(&excess, &mixed_floor)? {
        Some(k) => k,
        None => {
            let (floor, _) = eig_range(&mixed_floor)?;
            if floor > T::zero() {
                top / floor
            } else {
                T::infinity()
            }
        }
    };
    let shrink = relative_excess(&excess, &rhs)?.unwrap_or_else(T::infinity);
    let ulps = T::one() - T::epsilon() * T::lit(64.0);
    if shrink < mix {
        // W/(1+k) satisfies Tr_Y W/(1+k) ⪯ rhs since lhs ⪯ (1+k) rhs.
        return Ok((rho, w.scale(ulps / (T::one() + shrink))));
    }
    let eta = mixing_weight_ratio(mix);
    let keep = T::one() - eta;
    let mixed = &rho.scale(keep) + &Mat::identity(n).scale(eta / dim_lit(n));
    // Shrink W by a few ulps so roundoff cannot undo the repair.
    Ok((mixed, w.scale(keep * ulps)))
}

/// Shifts `Z` by a multiple of the identity so that `1⊗Z ⪰ BB^*` and
/// `Z ⪰ 0`; returns `(λ, Z)` with `λ = ‖A^*(1⊗Z)A‖`.
fn repair_general_dual<T: Real>(pair: &StinespringPair<T>, z: &Mat<T>) -> Result<(T, Mat<T>)> {
    let (m, r) = (pair.dim_out(), pair.dim_env());
    let z = z.hermitian_part();
    let bb = pair.b().mul_adjoint(pair.b());
    let (low_cover, _) = eig_range(&(&identity_kron(m, &z) - &bb))?;
    let (low_z, _) = eig_range(&z)?;
    let shift = (-low_cover).max(-low_z).max(T::zero());
    let z = if shift > T::zero() {
        let bump = shift * (T::one() + T::epsilon() * T::lit(64.0)) + T::min_positive_value();
        &z + &Mat::identity(r).scale(bump)
    } else {
        z
    };
    let lambda = general_dual_objective(pair, &z)?;
    Ok((lambda, z))
}

fn general_dual_objective<T: Real>(pair: &StinespringPair<T>, z: &Mat<T>) -> Result<T> {
    let a = pair.a();
    let pulled = a.adjoint_mul(&identity_kron(pair.dim_out(), z)).matmul(a);
    let (_, top) = eig_range(&pulled)?;
    Ok(top.max(T::zero()))
}

fn repair_channel_primal<T: Real>(n: usize, m: usize, w: &Mat<T>, rho: &Mat<T>) -> Result<(Mat<T>, Mat<T>)> {
    let rho = normalize_density(rho)?;
    let w = psd_projection(&herm(w))?.into_matrix();
    let (_, top) = eig_range(&(&w - &identity_kron(m, &rho)))?;
    let eta = mixing_weight(top, T::one() / dim_lit(n));
    if eta.is_zero() {
        return Ok((w, rho));
    }
    let keep = T::one() - eta;
    let mixed = &rho.scale(keep) + &Mat::identity(n).scale(eta / dim_lit(n));
    Ok((w.scale(keep * (T::one() - T::epsilon() * T::lit(64.0))), mixed))
}

fn repair_channel_dual<T: Real>(j: &Mat<T>, z: &Mat<T>) -> Result<Mat<T>> {
    let z = z.hermitian_part();
    let (low_cover, _) = eig_range(&(&z - j))?;
    let (low_z, _) = eig_range(&z)?;
    let shift = (-low_cover).max(-low_z).max(T::zero());
    Ok(if shift > T::zero() {
        let bump = shift * (T::one() + T::epsilon() * T::lit(64.0)) + T::min_positive_value();
        &z + &Mat::identity(z.rows()).scale(bump)
    } else {
        z
    })
}

fn stats<T: Real>(sol: &crate::sdp::SdpSolution<T>) -> SolverStats<T> {
    SolverStats {
        status: sol.status,
        iterations: sol.iterations,
        primal_value: sol.primal_value,
        dual_value: sol.dual_value,
        gap: sol.gap,
        primal_infeas: sol.primal_infeas,
        dual_infeas: sol.dual_infeas,
    }
}

fn status_warning<T: Real>(sol: &crate::sdp::SdpSolution<T>) -> Option<String> {
    (sol.status != SolveStatus::Optimal).then(|| {
        format!(
            "solver stopped with status {} after {} iterations; bounds are valid but may be loose",
            sol.status.as_str(),
            sol.iterations
        )
    })
}

fn clamp_value<T: Real>(raw: T, lower: T, upper: T) -> T {
    let lo = lower.max(T::zero());
    if upper < lo {
        return raw.max(T::zero());
    }
    raw.max(lo).min(upper)
}

fn general_route<T: Real>(phi: &SuperOp<T>, options: &NormOptions) -> Result<NormResult<T>> {
    let pair = phi.to_stinespring(T::lit(options.rank_tol));
    if pair.b().max_abs().is_zero() || pair.a().max_abs().is_zero() {
        return Ok(NormResult {
            value: T::zero(),
            lower_bound: T::zero(),
            upper_bound: T::zero(),
            method: Method::GeneralSdp,
            certificate: NormCertificate::zero_map(phi.dim_in(), phi.dim_out()),
            solver: None,
            warnings: Vec::new(),
        });
    }
    let problem = build_general_sdp(&pair)?;
    let sol = solve(&problem, &options.sdp)?;
    let (rho, w) = repair_general_primal(&pair, sol.primal.block(0), sol.primal.block(1))?;
    let (lambda, z) = repair_general_dual(&pair, sol.dual.block(1))?;
    let bb = pair.b().mul_adjoint(pair.b());
    let lower = bb.inner(&w).re.max(T::zero()).sqrt();
    let upper = lambda.sqrt();
    let value = clamp_value(sol.primal_value.max(T::zero()).sqrt(), lower, upper);
    Ok(NormResult {
        value,
        lower_bound: lower,
        upper_bound: upper,
        method: Method::GeneralSdp,
        certificate: NormCertificate::General {
            rho,
            w,
            lambda,
            z,
            pair,
        },
        solver: Some(stats(&sol)),
        warnings: status_warning(&sol).into_iter().collect(),
    })
}

fn channel_route<T: Real>(first: &SuperOp<T>, second: &SuperOp<T>, options: &NormOptions) -> Result<NormResult<T>> {
    let (n, m) = first.dims();
    let problem = build_channel_diff_sdp(first, second)?;
    let j = problem.objective().block(0).clone();
    let sol = solve(&problem, &options.sdp)?;
    let (w, rho) = repair_channel_primal(n, m, sol.primal.block(0), sol.primal.block(1))?;
    let z = repair_channel_dual(&j, sol.dual.block(0))?;
    let lower = T::lit(2.0) * j.inner(&w).re;
    let (_, top) = eig_range(&partial_trace(&z, TraceSide::First, (m, n))?)?;
    let upper = T::lit(2.0) * top;
    let value = clamp_value(T::lit(2.0) * sol.primal_value, lower, upper);
    Ok(NormResult {
        value,
        lower_bound: lower,
        upper_bound: upper,
        method: Method::ChannelDiffSdp,
        certificate: NormCertificate::ChannelDiff { rho, w, z },
        solver: Some(stats(&sol)),
        warnings: status_warning(&sol).into_iter().collect(),
    })
}

/// `‖Φ‖_◇ = ‖Φ ⊗ 1_{L(X)}‖_1`.
pub fn diamond_norm<T: Real>(phi: &SuperOp<T>, options: &NormOptions) -> Result<NormResult<T>> {
    let pair = match phi.representation() {
        Representation::ChannelDifference(p0, p1) => Some((p0, p1)),
        _ => None,
    };
    match (options.method, pair) {
        (MethodChoice::General, _) | (MethodChoice::Auto, None) => general_route(phi, options),
        (MethodChoice::ChannelDiff, None) => {
            invalid("the channel-difference program needs a map given as a difference of channels")
        }
        (MethodChoice::Auto | MethodChoice::ChannelDiff, Some((p0, p1))) => {
            let ok = p0.is_channel()?.is_channel() && p1.is_channel()?.is_channel();
            if ok {
                channel_route(p0, p1, options)
            } else {
                let mut res = general_route(phi, options)?;
                res.warnings
                    .push("operands are not channels within tolerance; used the general program".into());
                Ok(res)
            }
        }
    }
}

/// `‖Φ‖_cb = ‖Φ^*‖_◇`.
pub fn cb_spectral_norm<T: Real>(phi: &SuperOp<T>, options: &NormOptions) -> Result<NormResult<T>> {
    diamond_norm(&phi.adjoint(), options)
}

/// Rechecks a certificate against `Φ` using only dense linear algebra.
/// Every residual must be at most `tol` for the certificate to be valid.
pub fn verify_certificate<T: Real>(phi: &SuperOp<T>, cert: &NormCertificate<T>, tol: T) -> Result<CertificateCheck<T>> {
    let (n, m) = phi.dims();
    let mut violations = Vec::new();
    let mut check = |name: &str, residual: T| {
        if !(residual <= tol) {
            violations.push(format!(
                "{name}: residual {:e} exceeds {:e}",
                residual.to_f64_lossy(),
                tol.to_f64_lossy()
            ));
        }
    };
    let (lower, upper) = match cert {
        NormCertificate::General {
            rho,
            w,
            lambda,
            z,
            pair,
        } => {
            let r = pair.dim_env();
            if pair.dim_in() != n || pair.dim_out() != m {
                return invalid(format!(
                    "certificate pair maps {}→{} but the map is {n}→{m}",
                    pair.dim_in(),
                    pair.dim_out()
                ));
            }
            if rho.shape() != (n, n) || w.shape() != (m * r, m * r) || z.shape() != (r, r) {
                return invalid("certificate blocks do not match the pair dimensions");
            }
            let scale = T::one().max(frobenius_norm(&phi.to_choi()));
            check("pair reproduces the map", stinespring_residual(pair, phi)? / scale);
            check("rho is Hermitian", rho.anti_hermitian_norm());
            check("W is Hermitian", w.anti_hermitian_norm());
            check("Z is Hermitian", z.anti_hermitian_norm());
            check("trace of rho", (rho.trace().re - T::one()).abs());
            check("rho is positive semidefinite", -eig_range(rho)?.0);
            check("W is positive semidefinite", -eig_range(w)?.0);
            let a = pair.a();
            let gap = &partial_trace(w, TraceSide::First, (m, r))?
                - &partial_trace(&a.matmul(rho).mul_adjoint(a), TraceSide::First, (m, r))?;
            check("Tr_Y W below Tr_Y(A rho A*)", eig_range(&gap)?.1);
            check("Z is positive semidefinite", -eig_range(z)?.0);
            let bb = pair.b().mul_adjoint(pair.b());
            check(
                "1 ⊗ Z covers BB*",
                -eig_range(&(&identity_kron(m, &z.hermitian_part()) - &bb))?.0,
            );
            let objective = general_dual_objective(pair, &z.hermitian_part())?;
            check("lambda covers A*(1 ⊗ Z)A", objective - *lambda);
            let lower = bb.inner(&w.hermitian_part()).re.max(T::zero()).sqrt();
            (lower, objective.sqrt())
        }
        NormCertificate::ChannelDiff { rho, w, z } => {
            let d = n * m;
            if rho.shape() != (n, n) || w.shape() != (d, d) || z.shape() != (d, d) {
                return invalid(format!(
                    "certificate blocks {:?}, {:?}, {:?} do not match a {n}→{m} map",
                    rho.shape(),
                    w.shape(),
                    z.shape()
                ));
            }
            let j = phi.to_choi();
            check(
                "Choi matrix is Hermitian",
                j.anti_hermitian_norm() / T::one().max(frobenius_norm(&j)),
            );
            let j = j.hermitian_part();
            check("rho is Hermitian", rho.anti_hermitian_norm());
            check("W is Hermitian", w.anti_hermitian_norm());
            check("Z is Hermitian", z.anti_hermitian_norm());
            check("trace of rho", (rho.trace().re - T::one()).abs());
            check("rho is positive semidefinite", -eig_range(rho)?.0);
            check("W is positive semidefinite", -eig_range(w)?.0);
            check("W below 1 ⊗ rho", eig_range(&(w - &identity_kron(m, rho)))?.1);
            check("Z is positive semidefinite", -eig_range(z)?.0);
            check("Z covers J", -eig_range(&(z - &j))?.0);
            let lower = T::lit(2.0) * j.inner(&w.hermitian_part()).re;
            let upper = T::lit(2.0) * eig_range(&partial_trace(&z.hermitian_part(), TraceSide::First, (m, n))?)?.1;
            (lower, upper)
        }
    };
    Ok(CertificateCheck {
        valid: violations.is_empty(),
        lower,
        upper,
        violations,
    })
}

/// Balances a Stinespring pair using the dual solution `Z` of the general
/// program: `A' = (1⊗Z^{1/2})A`, `B' = (1⊗Z^{-1/2})B` represent the same
/// map and `‖A'‖‖B'‖ ≤ ‖Φ‖_◇ + ε` up to the solver gap.
pub fn rebalance_stinespring<T: Real>(
    pair: &StinespringPair<T>,
    epsilon: T,
    options: &SdpOptions,
) -> Result<StinespringPair<T>> {
    if !(epsilon > T::zero()) {
        return invalid("epsilon must be positive");
    }
    let a_norm = spectral_norm(pair.a())?;
    if a_norm.is_zero() || pair.b().max_abs().is_zero() {
        return invalid("cannot rebalance a pair for the zero map");
    }
    let problem = build_general_sdp(pair)?;
    let sol = solve(&problem, options)?;
    if sol.status == SolveStatus::NumericalFailure {
        return Err(Error::NumericalFailure("solver failed while rebalancing".into()));
    }
    let (_, z) = repair_general_dual(pair, sol.dual.block(1))?;
    let r = pair.dim_env();
    let z_norm = eig_range(&z)?.1.max(T::zero());
    let delta = (epsilon * epsilon / (T::lit(4.0) * a_norm * a_norm)).max(T::lit(1e-12) * z_norm);
    let z_reg = herm(&(&z + &Mat::identity(r).scale(delta)));
    let es = herm_eig(&z_reg)?;
    let root = es.map_values(|x| x.sqrt());
    let inv_root = matrix_power_pd(&z_reg, T::lit(-0.5))?.into_matrix();
    let m = pair.dim_out();
    let a = identity_kron(m, &root).matmul(pair.a());
    let b = identity_kron(m, &inv_root).matmul(pair.b());
    StinespringPair::new(a, b, pair.dim_in(), m, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type Op = SuperOp<f64>;
    type M = ComplexMatrix<f64>;

    fn phase_unitary(theta: f64) -> M {
        M::from_diag(&[Complex::new(1.0, 0.0), Complex::from_polar(1.0, theta)])
    }

    #[test]
    fn identity_channel_has_norm_one() {
        let res = diamond_norm(&Op::identity(2), &NormOptions::default()).unwrap();
        assert!((res.value - 1.0).abs() < 1e-6, "{res:?}");
        assert!(res.upper_bound - res.lower_bound < 1e-6);
        let check = verify_certificate(&Op::identity(2), &res.certificate, 1e-8).unwrap();
        assert!(check.valid, "{check:?}");
    }

    #[test]
    fn zero_map_shortcut() {
        let zero = Op::zero(2, 3);
        let res = diamond_norm(&zero, &NormOptions::default()).unwrap();
        assert_eq!(res.value, 0.0);
        assert!(res.solver.is_none());
        let check = verify_certificate(&zero, &res.certificate, 1e-12).unwrap();
        assert!(check.valid);
        assert_eq!((check.lower, check.upper), (0.0, 0.0));
    }

    #[test]
    fn half_unitary_difference_general_route() {
        let d = Op::from_choi(
            2,
            2,
            (&Op::identity(2).to_choi()
                - &Op::unitary(phase_unitary(std::f64::consts::FRAC_PI_2))
                    .unwrap()
                    .to_choi())
                .scale(0.5),
        )
        .unwrap();
        let res = diamond_norm(&d, &NormOptions::default()).unwrap();
        let oracle = d.induced_trace_norm_lower_bound(50, 1).unwrap();
        assert!((res.value - oracle).abs() < 1e-6, "{} vs {oracle}", res.value);
    }

    #[test]
    fn channel_difference_routes_agree() {
        for theta in [std::f64::consts::FRAC_PI_2, std::f64::consts::PI] {
            let diff = Op::channel_difference(Op::identity(2), Op::unitary(phase_unitary(theta)).unwrap()).unwrap();
            let fast = diamond_norm(&diff, &NormOptions::default()).unwrap();
            assert_eq!(fast.method, Method::ChannelDiffSdp);
            let general = diamond_norm(
                &diff,
                &NormOptions {
                    method: MethodChoice::General,
                    ..NormOptions::default()
                },
            )
            .unwrap();
            assert!((fast.value - general.value).abs() < 1e-6);
            let oracle = diff.induced_trace_norm_lower_bound(50, 1).unwrap();
            assert!((fast.value - oracle).abs() < 1e-6);
            let check = verify_certificate(&diff, &fast.certificate, 1e-8).unwrap();
            assert!(check.valid, "{check:?}");
        }
    }

    #[test]
    fn identical_channels_give_zero() {
        let diff = Op::channel_difference(Op::identity(2), Op::identity(2)).unwrap();
        let res = diamond_norm(&diff, &NormOptions::default()).unwrap();
        assert!(res.value.abs() < 1e-7, "{res:?}");
    }

    #[test]
    fn forced_channel_route_needs_channel_pair() {
        let opts = NormOptions {
            method: MethodChoice::ChannelDiff,
            ..NormOptions::default()
        };
        assert!(diamond_norm(&Op::identity(2), &opts).is_err());
    }

    #[test]
    fn transpose_map_has_norm_two() {
        let t = Op::transpose(2);
        let res = diamond_norm(&t, &NormOptions::default()).unwrap();
        assert!((res.value - 2.0).abs() < 1e-6);
        let cb = cb_spectral_norm(&t, &NormOptions::default()).unwrap();
        assert!((cb.value - 2.0).abs() < 1e-6);
    }

    #[test]
    fn mutated_certificate_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let phi = crate::random::cp_map::<f64, _>(&mut rng, 2, 2, 2);
        let res = diamond_norm(&phi, &NormOptions::default()).unwrap();
        let NormCertificate::General {
            rho,
            w,
            lambda,
            z,
            pair,
        } = res.certificate.clone()
        else {
            panic!("general certificate expected");
        };
        let es = herm_eig(&herm(&z)).unwrap();
        let r = z.rows();
        let v = M::column_vector(&es.vectors.column(r - 1));
        let push = es.values[r - 1] + 1e-3;
        let bad = &z - &v.mul_adjoint(&v).scale(push);
        let cert = NormCertificate::General {
            rho,
            w,
            lambda,
            z: bad,
            pair,
        };
        let check = verify_certificate(&phi, &cert, 1e-8).unwrap();
        assert!(!check.valid);
        assert!(check
            .violations
            .iter()
            .any(|v| v.contains("Z is positive semidefinite")));
    }

    #[test]
    fn rebalancing_examples() {
        let id = Op::identity(2).to_stinespring(1e-9);
        let scaled = StinespringPair::new(id.a().scale(2.0), id.b().scale(0.5), 2, 2, 1).unwrap();
        let eps = 1e-4;
        for pair in [&id, &scaled] {
            let out = rebalance_stinespring(pair, eps, &SdpOptions::default()).unwrap();
            assert!(out.norm_product().unwrap() <= 1.0 + eps);
            assert!(stinespring_residual(&out, &Op::identity(2)).unwrap() < 1e-9);
        }
        assert!(rebalance_stinespring(&Op::zero(2, 2).to_stinespring(1e-9), eps, &SdpOptions::default()).is_err());
    }
}
