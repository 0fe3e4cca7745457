use cbnorm::linalg::ComplexMatrix;
use cbnorm::random;
use cbnorm::sdp::{solve, BlockMatrix, BlockStructure, SdpOptions, SdpProblem, Side, SolveStatus};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type M = ComplexMatrix<f64>;

/// `max ⟨A, X⟩ s.t. K X K^* ⪯ B, X ⪰ 0` with invertible `K` and `B ≻ 0`, so
/// both sides are strictly feasible.
fn congruence_problem(seed: u64, n: usize) -> SdpProblem<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let k = &random::gaussian_matrix::<f64, _>(&mut r, n, n) + &M::identity(n).scale(2.0);
    let k2 = k.clone();
    let a = random::hermitian::<f64, _>(&mut r, n).into_matrix();
    let b = &random::psd::<f64, _>(&mut r, n, n).into_matrix() + &M::identity(n);
    let s = BlockStructure::new(vec![n]).unwrap();
    SdpProblem::new(
        s.clone(),
        s,
        move |x: &BlockMatrix<f64>| BlockMatrix::new(vec![k.matmul(x.block(0)).mul_adjoint(&k).hermitian_part()]),
        move |y: &BlockMatrix<f64>| BlockMatrix::new(vec![k2.adjoint_mul(y.block(0)).matmul(&k2).hermitian_part()]),
        BlockMatrix::new(vec![a]).unwrap(),
        BlockMatrix::new(vec![b]).unwrap(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn solves_are_deterministic(seed: u64, n in 1usize..4) {
        let problem = congruence_problem(seed, n);
        let first = solve(&problem, &SdpOptions::default()).unwrap();
        let second = solve(&problem, &SdpOptions::default()).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn optimal_points_are_feasible_and_close_the_gap(seed: u64, n in 1usize..4) {
        let problem = congruence_problem(seed, n);
        let opts = SdpOptions::default();
        let sol = solve(&problem, &opts).unwrap();
        prop_assert_eq!(sol.status, SolveStatus::Optimal);
        let scale = 1.0 + sol.primal_value.abs() + sol.dual_value.abs();
        prop_assert!(sol.gap <= opts.gap_tol * scale);
        prop_assert!(problem.check_feasibility(&sol.primal, Side::Primal).unwrap().is_feasible(1e-6 * scale));
        prop_assert!(problem.check_feasibility(&sol.dual, Side::Dual).unwrap().is_feasible(1e-6 * scale));
        // Weak duality evaluated directly on the returned points.
        let primal = problem.objective().inner(&sol.primal);
        let dual = problem.bound().inner(&sol.dual);
        prop_assert!(primal <= dual + 1e-6 * scale);
    }
}

#[test]
fn iteration_cap_is_reported() {
    let problem = congruence_problem(3, 3);
    let opts = SdpOptions {
        max_iter: 1,
        ..SdpOptions::default()
    };
    let sol = solve(&problem, &opts).unwrap();
    assert_eq!(sol.status, SolveStatus::MaxIterations);
}

#[test]
fn non_hermitian_data_is_rejected() {
    let bad = M::from_fn(2, 2, |i, j| num_complex::Complex::new((i + 2 * j) as f64, 0.0));
    assert!(BlockMatrix::new(vec![bad]).is_err());
    assert!(BlockStructure::new(vec![]).is_err());
    assert!(BlockStructure::new(vec![2, 0]).is_err());
}

#[test]
fn inconsistent_adjoint_is_rejected() {
    let s = BlockStructure::new(vec![2]).unwrap();
    let res = SdpProblem::new(
        s.clone(),
        s.clone(),
        |x: &BlockMatrix<f64>| Ok(x.clone()),
        |y: &BlockMatrix<f64>| Ok(y.scale(2.0)),
        BlockMatrix::identity(&s),
        BlockMatrix::identity(&s),
    );
    assert!(res.is_err());
}
