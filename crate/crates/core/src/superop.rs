//! Super-operators `Φ: L(C^n) -> L(C^m)` in Choi, Kraus, Stinespring and
//! channel-difference form.
//!
//! The Choi matrix is `J(Φ) = Σ_ij Φ(E_ij) ⊗ E_ij` on `Y ⊗ X`, output factor
//! slow. A Stinespring pair `(A, B)` maps `X -> Y ⊗ Z` with the environment
//! `Z` as the fast index, and `Φ(X) = Tr_Z(A X B^*)`.

use num_complex::Complex;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg::{
    frobenius_norm, herm_eigvals, kron, partial_trace, spectral_norm, svd, trace_norm, ComplexMatrix, HermitianMatrix,
    TraceSide,
};
use crate::random::unit_vector;
use crate::scalar::Real;

/// Operators `A, B: C^n -> C^m ⊗ C^r`.
#[derive(Debug, Clone, PartialEq)]
pub struct StinespringPair<T> {
    a: ComplexMatrix<T>,
    b: ComplexMatrix<T>,
    dim_in: usize,
    dim_out: usize,
    dim_env: usize,
}

impl<T: Real> StinespringPair<T> {
    pub fn new(
        a: ComplexMatrix<T>,
        b: ComplexMatrix<T>,
        dim_in: usize,
        dim_out: usize,
        dim_env: usize,
    ) -> Result<Self> {
        let shape = (dim_out * dim_env, dim_in);
        if a.shape() != shape || b.shape() != shape {
            return invalid(format!(
                "Stinespring operators must be {}x{}, got {:?} and {:?}",
                shape.0,
                shape.1,
                a.shape(),
                b.shape()
            ));
        }
        if dim_env == 0 {
            return invalid("environment dimension must be at least 1");
        }
        if !a.is_finite() || !b.is_finite() {
            return invalid("Stinespring operators have non-finite entries");
        }
        Ok(Self {
            a,
            b,
            dim_in,
            dim_out,
            dim_env,
        })
    }

    pub fn a(&self) -> &ComplexMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &ComplexMatrix<T> {
        &self.b
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn dim_env(&self) -> usize {
        self.dim_env
    }

    /// `Tr_Z(A X B^*)`.
    pub fn apply(&self, x: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        if x.shape() != (self.dim_in, self.dim_in) {
            return invalid(format!("input must be {0}x{0}, got {1:?}", self.dim_in, x.shape()));
        }
        let axb = self.a.matmul(x).mul_adjoint(&self.b);
        partial_trace(&axb, TraceSide::Second, (self.dim_out, self.dim_env))
    }

    /// `(L_z, R_z)` with `L_z = (1 ⊗ e_z^*) A`.
    pub fn kraus(&self) -> (Vec<ComplexMatrix<T>>, Vec<ComplexMatrix<T>>) {
        let slice = |op: &ComplexMatrix<T>, z: usize| {
            ComplexMatrix::from_fn(self.dim_out, self.dim_in, |y, x| op[(y * self.dim_env + z, x)])
        };
        (0..self.dim_env)
            .map(|z| (slice(&self.a, z), slice(&self.b, z)))
            .unzip()
    }

    /// Pair built from Kraus families, `A = Σ_z L_z ⊗ e_z`.
    pub fn from_kraus(left: &[ComplexMatrix<T>], right: &[ComplexMatrix<T>]) -> Result<Self> {
        if left.is_empty() || left.len() != right.len() {
            return invalid("Kraus families must be non-empty and of equal length");
        }
        let (m, n) = left[0].shape();
        if left.iter().chain(right).any(|k| k.shape() != (m, n)) {
            return invalid("Kraus operators must share one shape");
        }
        let r = left.len();
        let stack = |ops: &[ComplexMatrix<T>]| ComplexMatrix::from_fn(m * r, n, |row, x| ops[row % r][(row / r, x)]);
        Self::new(stack(left), stack(right), n, m, r)
    }

    /// Product of spectral norms `||A||_∞ ||B||_∞`.
    pub fn norm_product(&self) -> Result<T> {
        Ok(spectral_norm(&self.a)? * spectral_norm(&self.b)?)
    }
}

/// Stored form of a super-operator.
#[derive(Debug, Clone, PartialEq)]
pub enum Representation<T> {
    Choi(ComplexMatrix<T>),
    Kraus {
        left: Vec<ComplexMatrix<T>>,
        right: Vec<ComplexMatrix<T>>,
    },
    Stinespring(StinespringPair<T>),
    /// `Φ₀ - Φ₁` for two channels.
    ChannelDifference(Box<SuperOp<T>>, Box<SuperOp<T>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperOp<T> {
    dim_in: usize,
    dim_out: usize,
    rep: Representation<T>,
}

/// Outcome of the complete-positivity and trace-preservation checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelReport {
    pub is_cp: bool,
    pub is_tp: bool,
    /// Smallest eigenvalue of the Hermitian part of `J(Φ)`.
    pub min_choi_eigenvalue: f64,
    /// `||Tr_Y J(Φ) - 1_X||_∞`.
    pub tp_residual: f64,
}

impl ChannelReport {
    pub fn is_channel(&self) -> bool {
        self.is_cp && self.is_tp
    }
}

impl<T: Real> SuperOp<T> {
    pub fn from_choi(dim_in: usize, dim_out: usize, choi: ComplexMatrix<T>) -> Result<Self> {
        let d = dim_in * dim_out;
        if choi.shape() != (d, d) {
            return invalid(format!(
                "Choi matrix must be {d}x{d} for dims (in {dim_in}, out {dim_out}), got {:?}",
                choi.shape()
            ));
        }
        if !choi.is_finite() {
            return invalid("Choi matrix has non-finite entries");
        }
        Ok(Self {
            dim_in,
            dim_out,
            rep: Representation::Choi(choi),
        })
    }

    /// Completely positive map `X ↦ Σ K X K^*`.
    pub fn from_kraus(kraus: Vec<ComplexMatrix<T>>) -> Result<Self> {
        Self::from_kraus_pair(kraus.clone(), kraus)
    }

    /// `X ↦ Σ L_k X R_k^*`.
    pub fn from_kraus_pair(left: Vec<ComplexMatrix<T>>, right: Vec<ComplexMatrix<T>>) -> Result<Self> {
        if left.is_empty() || left.len() != right.len() {
            return invalid("Kraus families must be non-empty and of equal length");
        }
        let (m, n) = left[0].shape();
        if left.iter().chain(&right).any(|k| k.shape() != (m, n)) {
            return invalid(format!("all Kraus operators must be {m}x{n}"));
        }
        if left.iter().chain(&right).any(|k| !k.is_finite()) {
            return invalid("Kraus operators have non-finite entries");
        }
        Ok(Self {
            dim_in: n,
            dim_out: m,
            rep: Representation::Kraus { left, right },
        })
    }

    pub fn from_stinespring(pair: StinespringPair<T>) -> Self {
        Self {
            dim_in: pair.dim_in,
            dim_out: pair.dim_out,
            rep: Representation::Stinespring(pair),
        }
    }

    /// `Φ₀ - Φ₁`; both must be channels with matching dimensions.
    pub fn channel_difference(first: SuperOp<T>, second: SuperOp<T>) -> Result<Self> {
        if first.dims() != second.dims() {
            return invalid(format!(
                "channel dimensions differ: {:?} vs {:?}",
                first.dims(),
                second.dims()
            ));
        }
        for (name, op) in [("first", &first), ("second", &second)] {
            let report = op.is_channel()?;
            if !report.is_channel() {
                return invalid(format!(
                    "{name} operand is not a channel (min Choi eigenvalue {:e}, TP residual {:e})",
                    report.min_choi_eigenvalue, report.tp_residual
                ));
            }
        }
        Ok(Self {
            dim_in: first.dim_in,
            dim_out: first.dim_out,
            rep: Representation::ChannelDifference(Box::new(first), Box::new(second)),
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_kraus(vec![ComplexMatrix::identity(n)]).expect("identity Kraus")
    }

    pub fn zero(dim_in: usize, dim_out: usize) -> Self {
        let d = dim_in * dim_out;
        Self::from_choi(dim_in, dim_out, ComplexMatrix::zeros(d, d)).expect("zero Choi")
    }

    /// `X ↦ U X U^*`.
    pub fn unitary(u: ComplexMatrix<T>) -> Result<Self> {
        Self::from_kraus(vec![u])
    }

    /// Transpose map on `L(C^n)`; its Choi matrix is the swap operator.
    pub fn transpose(n: usize) -> Self {
        let choi = ComplexMatrix::from_fn(n * n, n * n, |r, c| {
            let (a, i) = (r / n, r % n);
            let (b, j) = (c / n, c % n);
            if a == j && b == i {
                Complex::one()
            } else {
                Complex::zero()
            }
        });
        Self::from_choi(n, n, choi).expect("transpose Choi")
    }

    /// `X ↦ Tr(X) 1/m`.
    pub fn completely_depolarizing(dim_in: usize, dim_out: usize) -> Self {
        let w = T::one() / T::from_usize(dim_out).expect("dimension");
        let choi = ComplexMatrix::identity(dim_in * dim_out).scale(w);
        Self::from_choi(dim_in, dim_out, choi).expect("depolarizing Choi")
    }

    #[inline]
    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    #[inline]
    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// `(dim_in, dim_out)`.
    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.dim_in, self.dim_out)
    }

    pub fn representation(&self) -> &Representation<T> {
        &self.rep
    }

    pub fn to_choi(&self) -> ComplexMatrix<T> {
        let (n, m) = (self.dim_in, self.dim_out);
        match &self.rep {
            Representation::Choi(j) => j.clone(),
            Representation::Kraus { left, right } => kraus_choi(left, right, n, m),
            Representation::Stinespring(pair) => {
                let (l, r) = pair.kraus();
                kraus_choi(&l, &r, n, m)
            }
            Representation::ChannelDifference(p0, p1) => &p0.to_choi() - &p1.to_choi(),
        }
    }

    pub fn apply(&self, x: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        let (n, m) = (self.dim_in, self.dim_out);
        if x.shape() != (n, n) {
            return invalid(format!("input must be {n}x{n}, got {:?}", x.shape()));
        }
        Ok(match &self.rep {
            Representation::Choi(j) => ComplexMatrix::from_fn(m, m, |a, b| {
                let mut acc = Complex::zero();
                for i in 0..n {
                    for k in 0..n {
                        acc = acc + x[(i, k)] * j[(a * n + i, b * n + k)];
                    }
                }
                acc
            }),
            Representation::Kraus { left, right } => {
                let mut acc = ComplexMatrix::zeros(m, m);
                for (l, r) in left.iter().zip(right) {
                    acc = &acc + &l.matmul(x).mul_adjoint(r);
                }
                acc
            }
            Representation::Stinespring(pair) => pair.apply(x)?,
            Representation::ChannelDifference(p0, p1) => &p0.apply(x)? - &p1.apply(x)?,
        })
    }

    /// Kraus families `(left, right)`; CP inputs stored as Kraus keep
    /// `left == right`.
    pub fn to_kraus(&self) -> (Vec<ComplexMatrix<T>>, Vec<ComplexMatrix<T>>) {
        match &self.rep {
            Representation::Kraus { left, right } => (left.clone(), right.clone()),
            Representation::Stinespring(pair) => pair.kraus(),
            _ => self.to_stinespring(T::lit(T::tolerances().rank)).kraus(),
        }
    }

    /// Minimal Stinespring pair from the SVD of the Choi matrix:
    /// `J = Σ σ_l x_l y_l^*`, `u_l = √σ_l x_l`, `v_l = √σ_l y_l`, keeping
    /// singular values above `rank_tol * σ_max`. The zero map gets `r = 1`
    /// with zero operators.
    pub fn to_stinespring(&self, rank_tol: T) -> StinespringPair<T> {
        let (n, m) = (self.dim_in, self.dim_out);
        let j = self.to_choi();
        let zero_pair = || {
            StinespringPair::new(ComplexMatrix::zeros(m, n), ComplexMatrix::zeros(m, n), n, m, 1).expect("zero pair")
        };
        let Ok(dec) = svd(&j) else {
            return zero_pair();
        };
        let smax = dec.values.first().copied().unwrap_or_else(T::zero);
        if smax <= T::zero() {
            return zero_pair();
        }
        let r = dec.values.iter().take_while(|&&s| s > rank_tol * smax).count().max(1);
        let mut a = ComplexMatrix::zeros(m * r, n);
        let mut b = ComplexMatrix::zeros(m * r, n);
        for l in 0..r {
            let root = dec.values[l].sqrt();
            let x = dec.left.column(l);
            let y = dec.right.column(l);
            // Fix the free phase so the largest entry of x_l is real positive.
            let pivot = x.iter().copied().fold(
                Complex::zero(),
                |best: Complex<T>, z| if z.norm() > best.norm() { z } else { best },
            );
            let ph = if pivot.norm() > T::zero() {
                pivot.conj() / pivot.norm()
            } else {
                Complex::one()
            };
            for yi in 0..m {
                for xi in 0..n {
                    a[(yi * r + l, xi)] = x[yi * n + xi] * ph * root;
                    b[(yi * r + l, xi)] = y[yi * n + xi] * ph * root;
                }
            }
        }
        StinespringPair::new(a, b, n, m, r).expect("consistent Stinespring shapes")
    }

    /// Adjoint map `Φ^*: L(C^m) -> L(C^n)`.
    pub fn adjoint(&self) -> Self {
        let (n, m) = (self.dim_in, self.dim_out);
        match &self.rep {
            Representation::Kraus { left, right } => Self {
                dim_in: m,
                dim_out: n,
                rep: Representation::Kraus {
                    left: left.iter().map(|k| k.adjoint()).collect(),
                    right: right.iter().map(|k| k.adjoint()).collect(),
                },
            },
            Representation::Stinespring(pair) => {
                let (l, r) = pair.kraus();
                let l: Vec<_> = l.iter().map(|k| k.adjoint()).collect();
                let r: Vec<_> = r.iter().map(|k| k.adjoint()).collect();
                Self::from_stinespring(StinespringPair::from_kraus(&l, &r).expect("adjoint Kraus"))
            }
            _ => {
                let j = self.to_choi();
                let adj = ComplexMatrix::from_fn(n * m, n * m, |row, col| {
                    let (i, a) = (row / m, row % m);
                    let (k, b) = (col / m, col % m);
                    j[(a * n + i, b * n + k)].conj()
                });
                Self::from_choi(m, n, adj).expect("adjoint Choi shape")
            }
        }
    }

    /// Choi's criterion for complete positivity and the partial-trace test for
    /// trace preservation.
    pub fn is_channel(&self) -> Result<ChannelReport> {
        let tol = T::tolerances();
        let j = self.to_choi();
        let h = HermitianMatrix::from_hermitian_part(&j);
        let vals = herm_eigvals(&h)?;
        let scale = vals.iter().fold(T::one(), |acc, v| acc.max(v.abs()));
        let min = vals.last().copied().unwrap_or_else(T::zero);
        let hermitian = j.anti_hermitian_norm() <= T::lit(tol.hermitian) * scale;
        let is_cp = hermitian && min >= -T::lit(tol.psd) * scale;
        let tr_y = partial_trace(&j, TraceSide::First, (self.dim_out, self.dim_in))?;
        let tp_residual = spectral_norm(&(&tr_y - &ComplexMatrix::identity(self.dim_in)))?;
        Ok(ChannelReport {
            is_cp,
            is_tp: tp_residual <= T::lit(tol.tp),
            min_choi_eigenvalue: min.to_f64_lossy(),
            tp_residual: tp_residual.to_f64_lossy(),
        })
    }

    pub fn is_hermiticity_preserving(&self) -> bool {
        let j = self.to_choi();
        let scale = T::one().max(frobenius_norm(&j));
        j.anti_hermitian_norm() <= T::lit(T::tolerances().hermitian) * scale
    }

    /// `c Φ`.
    pub fn scaled(&self, c: Complex<T>) -> Self {
        Self::from_choi(self.dim_in, self.dim_out, self.to_choi().scale_complex(c)).expect("same shape")
    }

    /// `X ↦ U Φ(X) U^*`.
    pub fn conjugate_output(&self, u: &ComplexMatrix<T>) -> Result<Self> {
        if u.shape() != (self.dim_out, self.dim_out) {
            return invalid("conjugating operator must be square on the output space");
        }
        let big = kron(u, &ComplexMatrix::identity(self.dim_in));
        let j = big.matmul(&self.to_choi()).mul_adjoint(&big);
        Self::from_choi(self.dim_in, self.dim_out, j)
    }

    /// `Φ ⊗ Ψ` acting on `L(X₁ ⊗ X₂) -> L(Y₁ ⊗ Y₂)`.
    pub fn tensor(&self, other: &Self) -> Self {
        let (l1, r1) = self.to_kraus();
        let (l2, r2) = other.to_kraus();
        let mut left = Vec::with_capacity(l1.len() * l2.len());
        let mut right = Vec::with_capacity(l1.len() * l2.len());
        for (a, b) in l1.iter().zip(&r1) {
            for (c, d) in l2.iter().zip(&r2) {
                left.push(kron(a, c));
                right.push(kron(b, d));
            }
        }
        Self::from_kraus_pair(left, right).expect("product Kraus shapes")
    }

    /// `(Φ ⊗ 1_W)(u v^*)` for `u, v ∈ X ⊗ W`, given `J(Φ)`.
    fn extended_action(
        choi: &ComplexMatrix<T>,
        n: usize,
        m: usize,
        w: usize,
        u: &[Complex<T>],
        v: &[Complex<T>],
    ) -> ComplexMatrix<T> {
        // out[(a,k),(b,l)] = Σ_ij u[(i,k)] conj(v[(j,l)]) J[(a,i),(b,j)]
        let mut out = ComplexMatrix::zeros(m * w, m * w);
        for a in 0..m {
            for b in 0..m {
                for i in 0..n {
                    for j in 0..n {
                        let jab = choi[(a * n + i, b * n + j)];
                        if jab.is_zero() {
                            continue;
                        }
                        for k in 0..w {
                            let uk = u[i * w + k] * jab;
                            for l in 0..w {
                                out[(a * w + k, b * w + l)] = out[(a * w + k, b * w + l)] + uk * v[j * w + l].conj();
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// `(Φ^* ⊗ 1_W)(U)` for `U` on `Y ⊗ W`, given `J(Φ)`.
    fn extended_adjoint_action(
        choi: &ComplexMatrix<T>,
        n: usize,
        m: usize,
        w: usize,
        u: &ComplexMatrix<T>,
    ) -> ComplexMatrix<T> {
        // G[(i,k),(j,l)] = Σ_ab U[(a,k),(b,l)] conj(J[(a,i),(b,j)])
        let mut g = ComplexMatrix::zeros(n * w, n * w);
        for a in 0..m {
            for b in 0..m {
                for i in 0..n {
                    for j in 0..n {
                        let jab = choi[(a * n + i, b * n + j)].conj();
                        if jab.is_zero() {
                            continue;
                        }
                        for k in 0..w {
                            for l in 0..w {
                                g[(i * w + k, j * w + l)] = g[(i * w + k, j * w + l)] + u[(a * w + k, b * w + l)] * jab;
                            }
                        }
                    }
                }
            }
        }
        g
    }

    /// Lower bound on the diamond norm by maximizing `||(Φ ⊗ 1)(u v^*)||_1`
    /// over unit `u, v ∈ X ⊗ X`. Each restart alternates between the polar
    /// part of the output and the top singular pair of the adjoint image,
    /// which never decreases the objective. Restart `k` is seeded with
    /// `seed + k`; the result is the maximum over restarts.
    pub fn induced_trace_norm_lower_bound(&self, restarts: usize, seed: u64) -> Result<T> {
        if restarts == 0 {
            return invalid("at least one restart is required");
        }
        let (n, m) = (self.dim_in, self.dim_out);
        let choi = self.to_choi();
        if choi.max_abs() == T::zero() {
            return Ok(T::zero());
        }
        let w = n;
        let tol = T::epsilon() * T::lit(16.0);
        let mut best = T::zero();
        for k in 0..restarts {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let mut u = unit_vector::<T, _>(&mut rng, n * w);
            let mut v = unit_vector::<T, _>(&mut rng, n * w);
            let mut value = trace_norm(&Self::extended_action(&choi, n, m, w, &u, &v))?;
            for _ in 0..2000 {
                let out = Self::extended_action(&choi, n, m, w, &u, &v);
                let dec = svd(&out)?;
                let polar = dec.left.mul_adjoint(&dec.right);
                let g = Self::extended_adjoint_action(&choi, n, m, w, &polar);
                let gdec = svd(&g)?;
                let nu = gdec.left.column(0);
                let nv = gdec.right.column(0);
                if crate::linalg::vector_norm(&nu) == T::zero() {
                    break;
                }
                let next = trace_norm(&Self::extended_action(&choi, n, m, w, &nu, &nv))?;
                if next <= value {
                    break;
                }
                let gain = next - value;
                u = nu;
                v = nv;
                value = next;
                if gain <= tol * (T::one() + value) {
                    break;
                }
            }
            best = best.max(value);
        }
        if !best.is_finite() {
            return Err(Error::NumericalFailure("oracle produced a non-finite value".into()));
        }
        Ok(best)
    }
}

fn kraus_choi<T: Real>(left: &[ComplexMatrix<T>], right: &[ComplexMatrix<T>], n: usize, m: usize) -> ComplexMatrix<T> {
    // J[(a,i),(b,j)] = Σ_l L_l[a,i] conj(R_l[b,j])
    let mut j = ComplexMatrix::zeros(m * n, m * n);
    for (l, r) in left.iter().zip(right) {
        let lv = l.as_slice();
        let rv = r.as_slice();
        for (p, &lp) in lv.iter().enumerate() {
            if lp.is_zero() {
                continue;
            }
            for (q, &rq) in rv.iter().enumerate() {
                j[(p, q)] = j[(p, q)] + lp * rq.conj();
            }
        }
    }
    j
}

/// Largest `||pair(E_ij) - Φ(E_ij)||_2` over the matrix units of the input.
pub fn stinespring_residual<T: Real>(pair: &StinespringPair<T>, phi: &SuperOp<T>) -> Result<T> {
    let n = phi.dim_in();
    if pair.dim_in() != n || pair.dim_out() != phi.dim_out() {
        return invalid("pair and map dimensions differ");
    }
    let mut worst = T::zero();
    for i in 0..n {
        for j in 0..n {
            let e = ComplexMatrix::unit(n, n, i, j);
            let d = &pair.apply(&e)? - &phi.apply(&e)?;
            worst = worst.max(frobenius_norm(&d));
        }
    }
    Ok(worst)
}
