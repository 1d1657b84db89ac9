mod common;

use common::*;
use proptest::prelude::*;
use qrnorm::conic::SolverOptions;
use qrnorm::entanglement::{log_negativity, negativity, reshuffled_negativity, tempered_negativity, verify_omega_witness};
use qrnorm::{log2, states};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

proptest! {
    #![proptest_config(cases(48))]

    #[test]
    fn negativities_multiply_under_kron(seed in any::<u64>(), a1 in 2usize..4, b1 in 2usize..3, a2 in 2usize..3, b2 in 2usize..4) {
        let mut r = rng(seed);
        let x = bipartite(random_herm(&mut r, a1 * b1), a1, b1);
        let y = bipartite(random_herm(&mut r, a2 * b2), a2, b2);
        let xy = x.kron(&y).regroup(&[true, false, true, false]).unwrap();
        let n = negativity(&xy).unwrap();
        prop_assert!(rel(n, negativity(&x).unwrap() * negativity(&y).unwrap()) < 1e-8);
        let rn = reshuffled_negativity(&xy).unwrap();
        prop_assert!(rel(rn, reshuffled_negativity(&x).unwrap() * reshuffled_negativity(&y).unwrap()) < 1e-8);
    }

    #[test]
    fn separable_mixtures_pass_both_criteria(seed in any::<u64>(), da in 2usize..4, db in 2usize..4) {
        let mut r = rng(seed);
        let sigma = random_separable(&mut r, da, db, 10);
        prop_assert!(reshuffled_negativity(&sigma).unwrap() <= 1.0 + 1e-10);
        prop_assert!((negativity(&sigma).unwrap() - 1.0).abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn tempered_negativity_below_log_negativity(seed in any::<u64>(), db in 2usize..4) {
        let mut r = rng(seed);
        let rho = bipartite(random_state(&mut r, 2 * db), 2, db);
        let t = tempered_negativity(&rho, &SolverOptions::default()).unwrap();
        prop_assert!(t <= log_negativity(&rho).unwrap() + 1e-7);
    }
}

#[test]
fn omega_chain_is_strict() {
    let opts = SolverOptions::default();
    for d in 3..=5 {
        let w = verify_omega_witness(d).unwrap();
        assert!(w.all_passed, "d={d}");
        let cost = tempered_negativity(&states::omega(d).unwrap(), &opts).unwrap();
        assert!((cost - log2(states::alpha(d))).abs() < 1e-6, "d={d}: E_tau {cost}");
        let distill = log2(1.0 + w.rg_upper);
        assert!((distill - log2(d as f64 / (d - 1) as f64)).abs() < 1e-12);
        let gap = cost - distill;
        assert!(gap > 0.0, "d={d}: gap {gap}");
        if d == 3 {
            assert!(gap >= 0.1, "gap {gap}");
        }
    }
}
