use cbnorm::linalg::{frobenius_norm, ComplexMatrix};
use cbnorm::random;
use cbnorm::superop::{stinespring_residual, SuperOp};
use num_complex::Complex;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type M = ComplexMatrix<f64>;
type Op = SuperOp<f64>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn close(a: &M, b: &M, tol: f64) -> bool {
    frobenius_norm(&(a - b)) <= tol * (1.0 + frobenius_norm(a).max(frobenius_norm(b)))
}

proptest! {
    #[test]
    fn choi_is_linear_in_the_map(seed: u64, n in 1usize..4, m in 1usize..4, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let mut r = rng(seed);
        let phi = random::map::<f64, _>(&mut r, n, m);
        let psi = random::map::<f64, _>(&mut r, n, m);
        let c = Complex::new(re, im);
        let sum = Op::from_choi(n, m, &phi.scaled(c).to_choi() + &psi.to_choi()).unwrap();
        let x = random::gaussian_matrix::<f64, _>(&mut r, n, n);
        let want = &phi.apply(&x).unwrap().scale_complex(c) + &psi.apply(&x).unwrap();
        prop_assert!(close(&sum.apply(&x).unwrap(), &want, 1e-12));
    }

    #[test]
    fn representations_act_alike(seed: u64, n in 1usize..4, m in 1usize..4) {
        let mut r = rng(seed);
        let phi = random::map::<f64, _>(&mut r, n, m);
        let x = random::gaussian_matrix::<f64, _>(&mut r, n, n);
        let direct = phi.apply(&x).unwrap();
        let (left, right) = phi.to_kraus();
        let via_kraus = Op::from_kraus_pair(left, right).unwrap().apply(&x).unwrap();
        let via_pair = phi.to_stinespring(1e-12).apply(&x).unwrap();
        prop_assert!(close(&direct, &via_kraus, 1e-10));
        prop_assert!(close(&direct, &via_pair, 1e-10));
    }

    #[test]
    fn adjoint_is_an_involution(seed: u64, n in 1usize..4, m in 1usize..4) {
        let phi = random::map::<f64, _>(&mut rng(seed), n, m);
        let back = phi.adjoint().adjoint();
        prop_assert_eq!(back.dims(), phi.dims());
        prop_assert!(close(&back.to_choi(), &phi.to_choi(), 1e-14));
    }

    #[test]
    fn adjoint_pairs_with_the_trace_inner_product(seed: u64, n in 1usize..4, m in 1usize..4) {
        let mut r = rng(seed);
        let phi = random::map::<f64, _>(&mut r, n, m);
        let x = random::gaussian_matrix::<f64, _>(&mut r, n, n);
        let y = random::gaussian_matrix::<f64, _>(&mut r, m, m);
        let lhs = y.inner(&phi.apply(&x).unwrap());
        let rhs = phi.adjoint().apply(&y).unwrap().inner(&x);
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn stinespring_pair_reconstructs_the_map(seed: u64, n in 1usize..4, m in 1usize..4) {
        let phi = random::map::<f64, _>(&mut rng(seed), n, m);
        let pair = phi.to_stinespring(1e-12);
        let scale = 1.0 + frobenius_norm(&phi.to_choi());
        prop_assert!(stinespring_residual(&pair, &phi).unwrap() <= 1e-10 * scale);
        prop_assert!(pair.dim_env() <= n * m);
    }

    #[test]
    fn random_channels_pass_the_channel_check(seed: u64, n in 1usize..4, m in 1usize..4, extra in 0usize..2) {
        let env = n.div_ceil(m) + extra;
        let phi = random::channel::<f64, _>(&mut rng(seed), n, m, env);
        let report = phi.is_channel().unwrap();
        prop_assert!(report.is_channel(), "{report:?}");
        prop_assert!(phi.is_hermiticity_preserving());
    }

    #[test]
    fn tensor_product_acts_on_product_inputs(seed: u64, n1 in 1usize..3, m1 in 1usize..3, n2 in 1usize..3, m2 in 1usize..3) {
        let mut r = rng(seed);
        let a = random::map::<f64, _>(&mut r, n1, m1);
        let b = random::map::<f64, _>(&mut r, n2, m2);
        let x = random::gaussian_matrix::<f64, _>(&mut r, n1, n1);
        let y = random::gaussian_matrix::<f64, _>(&mut r, n2, n2);
        let got = a.tensor(&b).apply(&cbnorm::linalg::kron(&x, &y)).unwrap();
        let want = cbnorm::linalg::kron(&a.apply(&x).unwrap(), &b.apply(&y).unwrap());
        prop_assert!(close(&got, &want, 1e-12));
    }
}

#[test]
fn transpose_is_positive_but_not_completely_positive() {
    let t = Op::transpose(2);
    let report = t.is_channel().unwrap();
    assert!(report.is_tp);
    assert!(!report.is_cp);
    assert!((report.min_choi_eigenvalue + 1.0).abs() < 1e-12);
}

#[test]
fn channel_difference_rejects_non_channels() {
    assert!(Op::channel_difference(Op::identity(2), Op::transpose(2)).is_err());
    assert!(Op::channel_difference(Op::identity(2), Op::identity(3)).is_err());
}
