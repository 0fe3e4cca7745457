use num_complex::Complex;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::linalg::{frobenius_norm, herm_eigvals, ComplexMatrix, HermitianMatrix};
use crate::random;
use crate::scalar::Real;

/// Ordered list of Hermitian block sizes of a block-diagonal space.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockStructure {
    blocks: Vec<usize>,
}

impl BlockStructure {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() || blocks.contains(&0) {
            return invalid(format!("block sizes must be non-empty and positive, got {blocks:?}"));
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Sum of block sizes.
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    /// Real dimension of the Hermitian block-diagonal space.
    pub fn real_dim(&self) -> usize {
        self.blocks.iter().map(|k| k * k).sum()
    }
}

/// Block-diagonal Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix<T> {
    blocks: Vec<ComplexMatrix<T>>,
}

impl<T: Real> BlockMatrix<T> {
    /// Blocks must be square and Hermitian within tolerance; the stored form
    /// is the Hermitian part.
    pub fn new(blocks: Vec<ComplexMatrix<T>>) -> Result<Self> {
        let blocks = blocks
            .into_iter()
            .map(|b| HermitianMatrix::new(b).map(HermitianMatrix::into_matrix))
            .collect::<Result<Vec<_>>>()?;
        if blocks.is_empty() {
            return invalid("block matrix needs at least one block");
        }
        Ok(Self { blocks })
    }

    pub(crate) fn from_blocks_unchecked(blocks: Vec<ComplexMatrix<T>>) -> Self {
        Self { blocks }
    }

    pub fn zeros(structure: &BlockStructure) -> Self {
        Self {
            blocks: structure.blocks.iter().map(|&k| ComplexMatrix::zeros(k, k)).collect(),
        }
    }

    pub fn identity(structure: &BlockStructure) -> Self {
        Self {
            blocks: structure.blocks.iter().map(|&k| ComplexMatrix::identity(k)).collect(),
        }
    }

    pub fn structure(&self) -> BlockStructure {
        BlockStructure {
            blocks: self.blocks.iter().map(|b| b.rows()).collect(),
        }
    }

    pub fn block(&self, i: usize) -> &ComplexMatrix<T> {
        &self.blocks[i]
    }

    pub fn blocks(&self) -> &[ComplexMatrix<T>] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<ComplexMatrix<T>> {
        self.blocks
    }

    /// Real inner product `Σ Re Tr(A_k^* B_k)`.
    pub fn inner(&self, other: &Self) -> T {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.inner(b).re).sum()
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            blocks: self.blocks.iter().map(|b| b.scale(s)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> T {
        self.blocks
            .iter()
            .map(|b| {
                let f = frobenius_norm(b);
                f * f
            })
            .sum::<T>()
            .sqrt()
    }

    /// Largest anti-Hermitian component over all blocks.
    pub fn anti_hermitian_norm(&self) -> T {
        self.blocks
            .iter()
            .fold(T::zero(), |acc, b| acc.max(b.anti_hermitian_norm()))
    }

    /// Extreme eigenvalues `(min, max)` over all blocks.
    pub fn eigenvalue_range(&self) -> Result<(T, T)> {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for b in &self.blocks {
            let vals = herm_eigvals(&HermitianMatrix::from_hermitian_part(b))?;
            hi = hi.max(vals[0]);
            lo = lo.min(vals[vals.len() - 1]);
        }
        Ok((lo, hi))
    }

    /// Spectral norm, the largest over blocks.
    pub fn spectral_norm(&self) -> Result<T> {
        let (lo, hi) = self.eigenvalue_range()?;
        Ok(lo.abs().max(hi.abs()))
    }
}

/// One element of the orthonormal real basis of `Herm(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum HermBasis {
    Diag(usize),
    /// `(E_jl + E_lj) / √2`.
    Sym(usize, usize),
    /// `(i E_jl - i E_lj) / √2`.
    Anti(usize, usize),
}

impl HermBasis {
    pub(crate) fn enumerate(k: usize) -> Vec<HermBasis> {
        let mut out = Vec::with_capacity(k * k);
        for j in 0..k {
            out.push(HermBasis::Diag(j));
            for l in j + 1..k {
                out.push(HermBasis::Sym(j, l));
                out.push(HermBasis::Anti(j, l));
            }
        }
        out
    }

    pub(crate) fn entries<T: Real>(self) -> Vec<(usize, usize, Complex<T>)> {
        let h = T::FRAC_1_SQRT_2();
        let z = T::zero();
        match self {
            HermBasis::Diag(j) => vec![(j, j, Complex::new(T::one(), z))],
            HermBasis::Sym(j, l) => vec![(j, l, Complex::new(h, z)), (l, j, Complex::new(h, z))],
            HermBasis::Anti(j, l) => vec![(j, l, Complex::new(z, h)), (l, j, Complex::new(z, -h))],
        }
    }

    pub(crate) fn matrix<T: Real>(self, k: usize) -> ComplexMatrix<T> {
        let mut m = ComplexMatrix::zeros(k, k);
        for (p, q, v) in self.entries() {
            m[(p, q)] = v;
        }
        m
    }

    /// Coordinate `⟨E, H⟩` of a Hermitian `H`.
    pub(crate) fn coordinate<T: Real>(self, h: &ComplexMatrix<T>) -> T {
        self.entries::<T>()
            .into_iter()
            .map(|(p, q, v)| (v.conj() * h[(p, q)]).re)
            .sum()
    }
}

/// Sparse Hermitian entries `(block, row, col, value)`.
pub(crate) type SparseBlocks<T> = Vec<(usize, usize, usize, Complex<T>)>;

/// One basis direction of the constraint space together with `Ψ^*` of it.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ConstraintRow<T> {
    pub(crate) con_block: usize,
    pub(crate) basis: HermBasis,
    /// `Ψ^*(E)` over the variable blocks, zero entries dropped.
    pub(crate) adjoint: SparseBlocks<T>,
}

/// Semidefinite program over block-diagonal Hermitian variables:
///
/// ```text
/// primal: maximize ⟨A, X⟩  subject to  Ψ(X) ⪯ B,   X ⪰ 0
/// dual:   minimize ⟨B, Y⟩  subject to  Ψ^*(Y) ⪰ A, Y ⪰ 0
/// ```
///
/// `Ψ` is stored as one row per basis element `E` of the constraint space,
/// namely the Hermitian matrix `Ψ^*(E)` that pairs against `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem<T> {
    var: BlockStructure,
    con: BlockStructure,
    rows: Vec<ConstraintRow<T>>,
    objective: BlockMatrix<T>,
    bound: BlockMatrix<T>,
}

/// Which side of the primal/dual pair a candidate point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Primal,
    Dual,
}

/// Constraint violation of a candidate point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility<T> {
    /// Largest positive eigenvalue of `Ψ(X) - B` (primal) or `A - Ψ^*(Y)` (dual).
    pub max_violation: T,
    /// Smallest eigenvalue of the candidate itself.
    pub min_eigenvalue: T,
}

impl<T: Real> Feasibility<T> {
    pub fn is_feasible(&self, tol: T) -> bool {
        self.max_violation <= tol && self.min_eigenvalue >= -tol
    }
}

const CONSISTENCY_TRIALS: u64 = 4;

impl<T: Real> SdpProblem<T> {
    /// Builds the problem from `Ψ` and its adjoint. Rows are materialized
    /// from `adjoint`; `forward` is used only to check that the two agree
    /// and that `Ψ` preserves Hermiticity.
    pub fn new<F, G>(
        var: BlockStructure,
        con: BlockStructure,
        forward: F,
        adjoint: G,
        objective: BlockMatrix<T>,
        bound: BlockMatrix<T>,
    ) -> Result<Self>
    where
        F: Fn(&BlockMatrix<T>) -> Result<BlockMatrix<T>>,
        G: Fn(&BlockMatrix<T>) -> Result<BlockMatrix<T>>,
    {
        if objective.structure() != var {
            return invalid(format!(
                "objective blocks {:?} do not match variable structure {:?}",
                objective.structure().blocks(),
                var.blocks()
            ));
        }
        if bound.structure() != con {
            return invalid(format!(
                "bound blocks {:?} do not match constraint structure {:?}",
                bound.structure().blocks(),
                con.blocks()
            ));
        }

        let mut rows = Vec::with_capacity(con.real_dim());
        for (cb, &k) in con.blocks().iter().enumerate() {
            for basis in HermBasis::enumerate(k) {
                let mut e = BlockMatrix::zeros(&con);
                e.blocks[cb] = basis.matrix(k);
                let image = adjoint(&e)?;
                if image.structure() != var {
                    return invalid("adjoint map returned blocks of the wrong shape");
                }
                let mut sparse = Vec::new();
                for (vb, m) in image.blocks.iter().enumerate() {
                    for p in 0..m.rows() {
                        for q in 0..m.cols() {
                            let v = m[(p, q)];
                            if !v.is_zero() {
                                sparse.push((vb, p, q, v));
                            }
                        }
                    }
                }
                rows.push(ConstraintRow {
                    con_block: cb,
                    basis,
                    adjoint: sparse,
                });
            }
        }

        let problem = Self {
            var,
            con,
            rows,
            objective,
            bound,
        };
        problem.check_map(&forward)?;
        Ok(problem)
    }

    fn check_map<F>(&self, forward: &F) -> Result<()>
    where
        F: Fn(&BlockMatrix<T>) -> Result<BlockMatrix<T>>,
    {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let tol = T::lit(T::tolerances().hermitian) * T::lit(0.1);
        for _ in 0..CONSISTENCY_TRIALS {
            let x = BlockMatrix {
                blocks: self
                    .var
                    .blocks()
                    .iter()
                    .map(|&k| random::hermitian::<T, _>(&mut rng, k).into_matrix())
                    .collect(),
            };
            let y = BlockMatrix {
                blocks: self
                    .con
                    .blocks()
                    .iter()
                    .map(|&k| random::hermitian::<T, _>(&mut rng, k).into_matrix())
                    .collect(),
            };
            let image = forward(&x)?;
            if image.structure() != self.con {
                return invalid("forward map returned blocks of the wrong shape");
            }
            let scale = T::one().max(image.frobenius_norm()) * T::one().max(y.frobenius_norm());
            let skew = image.anti_hermitian_norm();
            if skew > tol * scale {
                return invalid(format!(
                    "map does not preserve Hermiticity (skew part {:e})",
                    skew.to_f64_lossy()
                ));
            }
            let lhs = y.inner(&image);
            let adj = self.apply_adjoint(&y);
            let scale = scale.max(T::one().max(adj.frobenius_norm()) * T::one().max(x.frobenius_norm()));
            let rhs = adj.inner(&x);
            if (lhs - rhs).abs() > tol * scale {
                return invalid(format!(
                    "forward and adjoint maps disagree: <Y, Ψ(X)> = {lhs:e}, <Ψ*(Y), X> = {rhs:e}"
                ));
            }
        }
        Ok(())
    }

    pub fn var_structure(&self) -> &BlockStructure {
        &self.var
    }

    pub fn con_structure(&self) -> &BlockStructure {
        &self.con
    }

    /// `A`, paired with the primal variable.
    pub fn objective(&self) -> &BlockMatrix<T> {
        &self.objective
    }

    /// `B`, the right-hand side of the constraint.
    pub fn bound(&self) -> &BlockMatrix<T> {
        &self.bound
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub(crate) fn rows(&self) -> &[ConstraintRow<T>] {
        &self.rows
    }

    /// `Ψ(X) = Σ_E ⟨Ψ^*(E), X⟩ E`.
    pub fn apply(&self, x: &BlockMatrix<T>) -> BlockMatrix<T> {
        let mut out = BlockMatrix::zeros(&self.con);
        for row in &self.rows {
            let c: T = row
                .adjoint
                .iter()
                .map(|&(b, p, q, v)| (v.conj() * x.blocks[b][(p, q)]).re)
                .sum();
            if c.is_zero() {
                continue;
            }
            for (p, q, v) in row.basis.entries::<T>() {
                let m = &mut out.blocks[row.con_block];
                m[(p, q)] = m[(p, q)] + v * c;
            }
        }
        out
    }

    /// `Ψ^*(Y) = Σ_E ⟨E, Y⟩ Ψ^*(E)`.
    pub fn apply_adjoint(&self, y: &BlockMatrix<T>) -> BlockMatrix<T> {
        let mut out = BlockMatrix::zeros(&self.var);
        for row in &self.rows {
            let c = row.basis.coordinate(&y.blocks[row.con_block]);
            if c.is_zero() {
                continue;
            }
            for &(b, p, q, v) in &row.adjoint {
                let m = &mut out.blocks[b];
                m[(p, q)] = m[(p, q)] + v * c;
            }
        }
        out
    }

    /// Violation of `Ψ(X) ⪯ B` (primal) or `Ψ^*(Y) ⪰ A` (dual) and the least
    /// eigenvalue of the point.
    pub fn check_feasibility(&self, point: &BlockMatrix<T>, side: Side) -> Result<Feasibility<T>> {
        let (expected, residual) = match side {
            Side::Primal => (&self.var, self.apply(point).sub(&self.bound)),
            Side::Dual => (&self.con, self.objective.sub(&self.apply_adjoint(point))),
        };
        if &point.structure() != expected {
            return invalid(format!(
                "point blocks {:?} do not match {:?}",
                point.structure().blocks(),
                expected.blocks()
            ));
        }
        let (_, top) = residual.eigenvalue_range()?;
        let (low, _) = point.eigenvalue_range()?;
        Ok(Feasibility {
            max_violation: top.max(T::zero()),
            min_eigenvalue: low,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = ComplexMatrix<f64>;

    fn identity_problem(n: usize) -> SdpProblem<f64> {
        let s = BlockStructure::new(vec![n]).unwrap();
        SdpProblem::new(
            s.clone(),
            s.clone(),
            |x| Ok(x.clone()),
            |y| Ok(y.clone()),
            BlockMatrix::identity(&s),
            BlockMatrix::identity(&s),
        )
        .unwrap()
    }

    #[test]
    fn basis_is_orthonormal() {
        let basis = HermBasis::enumerate(3);
        assert_eq!(basis.len(), 9);
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let ip = a.matrix::<f64>(3).inner(&b.matrix(3));
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip.re - expect).abs() < 1e-15 && ip.im.abs() < 1e-15);
            }
            assert_eq!(a.matrix::<f64>(3).anti_hermitian_norm(), 0.0);
        }
    }

    #[test]
    fn structure_rejects_empty_blocks() {
        assert!(BlockStructure::new(vec![2, 0]).is_err());
        assert!(BlockStructure::new(vec![]).is_err());
        assert_eq!(BlockStructure::new(vec![2, 3]).unwrap().real_dim(), 13);
    }

    #[test]
    fn rows_reproduce_map() {
        let p = identity_problem(3);
        assert_eq!(p.num_constraints(), 9);
        let h = crate::random::hermitian::<f64, _>(&mut ChaCha8Rng::seed_from_u64(1), 3).into_matrix();
        let x = BlockMatrix::new(vec![h.clone()]).unwrap();
        assert!(frobenius_norm(&(p.apply(&x).block(0) - &h)) < 1e-14);
        assert!(frobenius_norm(&(p.apply_adjoint(&x).block(0) - &h)) < 1e-14);
    }

    #[test]
    fn inconsistent_adjoint_rejected() {
        let s = BlockStructure::new(vec![2]).unwrap();
        let r = SdpProblem::new(
            s.clone(),
            s.clone(),
            |x: &BlockMatrix<f64>| Ok(x.scale(2.0)),
            |y: &BlockMatrix<f64>| Ok(y.clone()),
            BlockMatrix::identity(&s),
            BlockMatrix::identity(&s),
        );
        assert!(r.is_err());
    }

    #[test]
    fn non_hermitian_map_rejected() {
        let s = BlockStructure::new(vec![2]).unwrap();
        let twist = Complex::new(0.0, 1.0);
        let r = SdpProblem::new(
            s.clone(),
            s.clone(),
            move |x: &BlockMatrix<f64>| {
                Ok(BlockMatrix::from_blocks_unchecked(vec![x
                    .block(0)
                    .scale_complex(twist)]))
            },
            move |y: &BlockMatrix<f64>| {
                Ok(BlockMatrix::from_blocks_unchecked(vec![y
                    .block(0)
                    .scale_complex(twist.conj())]))
            },
            BlockMatrix::identity(&s),
            BlockMatrix::identity(&s),
        );
        assert!(r.is_err());
    }

    #[test]
    fn feasibility_examples() {
        let p = identity_problem(2);
        let s = p.var_structure().clone();
        let f = p.check_feasibility(&BlockMatrix::zeros(&s), Side::Primal).unwrap();
        assert_eq!(f.max_violation, 0.0);
        assert!(f.is_feasible(0.0));
        let two = BlockMatrix::new(vec![M::identity(2).scale(2.0)]).unwrap();
        let f = p.check_feasibility(&two, Side::Primal).unwrap();
        assert!((f.max_violation - 1.0).abs() < 1e-14);
        assert!(!f.is_feasible(1e-8));
        let f = p.check_feasibility(&two, Side::Dual).unwrap();
        assert_eq!(f.max_violation, 0.0);
        assert!((f.min_eigenvalue - 2.0).abs() < 1e-14);
    }
}
