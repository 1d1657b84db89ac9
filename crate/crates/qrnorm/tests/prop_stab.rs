mod common;

use common::*;
use proptest::prelude::*;
use qrnorm::conic::SolverOptions;
use qrnorm::stab::{enumerate_stabiliser_states, pauli_expectations, stab_base_norm, stab_norm, stab_norm_dual};
use qrnorm::states;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

proptest! {
    #![proptest_config(cases(48))]

    #[test]
    fn p_norm_and_dual_multiply_under_kron(seed in any::<u64>(), n1 in 1usize..3, n2 in 1usize..3) {
        let mut r = rng(seed);
        let x = random_herm(&mut r, 1 << n1);
        let y = random_herm(&mut r, 1 << n2);
        let xy = x.kron(&y);
        prop_assert!(rel(stab_norm(&xy).unwrap(), stab_norm(&x).unwrap() * stab_norm(&y).unwrap()) < 1e-10);
        prop_assert!(rel(stab_norm_dual(&xy).unwrap(), stab_norm_dual(&x).unwrap() * stab_norm_dual(&y).unwrap()) < 1e-10);
    }
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn base_norm_dominates_p_norm(seed in any::<u64>(), n in 1usize..3) {
        let mut r = rng(seed);
        let x = random_herm(&mut r, 1 << n);
        let base = stab_base_norm(&x, &SolverOptions::default()).unwrap().value;
        prop_assert!(base >= stab_norm(&x).unwrap() - 1e-7);
    }
}

#[test]
fn stabiliser_states_have_unit_p_norm() {
    for n in 1..=3 {
        for p in enumerate_stabiliser_states(n).unwrap().projectors() {
            assert!((stab_norm(&p).unwrap() - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn hoggar_expectations_are_flat() {
    let e = pauli_expectations(&states::hoggar(None).unwrap().operator).unwrap();
    assert_eq!(e.len(), 64);
    assert!((e[0] - 1.0).abs() <= 1e-12);
    for v in &e[1..] {
        assert!((v.abs() - 1.0 / 3.0).abs() <= 1e-12, "{v}");
    }
}
