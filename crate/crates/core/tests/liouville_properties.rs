mod common;

use common::*;
use lindkrotov::liouville::{
    build_liouvillian, commutator_superop, dissipator_superop, liouville_inner, unvec, vec,
    LiouvilleVector,
};
use lindkrotov::{CMatrix, C64};
use proptest::prelude::*;

fn matrix_strategy(d: usize) -> impl Strategy<Value = CMatrix> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d * d)
        .prop_map(move |v| CMatrix::from_iterator(d, d, v.into_iter().map(|(a, b)| C64::new(a, b))))
}

fn vec_of(m: &CMatrix) -> lindkrotov::CVector {
    LiouvilleVector::from_matrix(m).unwrap().into_data()
}

fn triple() -> impl Strategy<Value = (CMatrix, CMatrix, CMatrix)> {
    (2usize..=3).prop_flat_map(|d| (matrix_strategy(d), matrix_strategy(d), matrix_strategy(d)))
}

proptest! {
    #[test]
    fn vectorization_is_a_homomorphism((b, rho, c) in triple()) {
        let lhs = vec_of(&(&b * &rho * &c));
        let rhs = c.transpose().kronecker(&b) * vec_of(&rho);
        let err = (lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12, "error {err}");
    }

    #[test]
    fn vec_round_trip((_, rho, _) in triple()) {
        let v = LiouvilleVector::from_matrix(&rho).unwrap();
        prop_assert_eq!(unvec(&v), rho);
    }
}

#[test]
fn inner_product_is_hilbert_schmidt() {
    let mut rng = rng(3);
    for d in [2, 3] {
        let a = random_density(&mut rng, d);
        let b = random_density(&mut rng, d);
        let ip = liouville_inner(&vec(&a), &vec(&b)).unwrap();
        let hs = (a.matrix().adjoint() * b.matrix()).trace();
        assert!((ip - hs).norm() < 1e-14);
    }
}

#[test]
fn superoperators_match_their_action() {
    let mut rng = rng(11);
    for d in [2, 3] {
        let h = random_hermitian(&mut rng, d);
        let l = random_matrix(&mut rng, d);
        let rho = random_density(&mut rng, d);
        let r = rho.matrix();

        let comm = commutator_superop(&h).unwrap() * vec(&rho).into_data();
        let direct = &h * r - r * &h;
        assert!(max_abs_diff(&CMatrix::from_column_slice(d, d, comm.as_slice()), &direct) < 1e-13);

        let diss = dissipator_superop(std::slice::from_ref(&l), d).unwrap() * vec(&rho).into_data();
        let ld = l.adjoint();
        let ldl = &ld * &l;
        let direct = &l * r * &ld - (&ldl * r + r * &ldl) * C64::new(0.5, 0.0);
        assert!(max_abs_diff(&CMatrix::from_column_slice(d, d, diss.as_slice()), &direct) < 1e-13);
    }
}

#[test]
fn generator_preserves_trace_and_hermiticity() {
    let mut rng = rng(5);
    for d in [2, 3] {
        let h0 = random_hermitian(&mut rng, d);
        let mu = random_hermitian(&mut rng, d);
        let ops = vec![random_matrix(&mut rng, d), random_matrix(&mut rng, d)];
        let liou = build_liouvillian(&h0, &mu, &ops).unwrap();
        let rho = random_density(&mut rng, d);
        for xi in [0.0, 0.7, -2.3] {
            let drho = liou.generator(xi) * vec(&rho).into_data();
            let m = CMatrix::from_column_slice(d, d, drho.as_slice());
            assert!(m.trace().norm() < 1e-13);
            assert!(max_abs_diff(&m, &m.adjoint()) < 1e-13);
        }
    }
}
