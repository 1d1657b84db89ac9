mod common;

use common::*;
use proptest::prelude::*;
use qrnorm::conic::SolverOptions;
use qrnorm::states;
use qrnorm::wigner::{fw_base_norm, heisenberg_weyl, wigner_rep, wigner_trace_norm};
use qrnorm::Operator;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn unit_trace(op: Operator) -> Operator {
    let d = op.rows();
    let shift = (op.trace().re - 1.0) / d as f64;
    (&op - &Operator::identity(d).scale(shift)).hermitian_part()
}

fn random_hw(r: &mut ChaCha8Rng, n: usize) -> Operator {
    let mut t = heisenberg_weyl(r.gen_range(0..3), r.gen_range(0..3)).unwrap();
    for _ in 1..n {
        t = t.kron(&heisenberg_weyl(r.gen_range(0..3), r.gen_range(0..3)).unwrap());
    }
    t
}

proptest! {
    #![proptest_config(cases(48))]

    #[test]
    fn wigner_values_sum_to_one(seed in any::<u64>(), n in 1usize..3) {
        let mut r = rng(seed);
        let y = unit_trace(random_herm(&mut r, 3usize.pow(n as u32)));
        prop_assert!((wigner_rep(&y).unwrap().sum() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn wigner_norm_is_covariant(seed in any::<u64>(), n in 1usize..3) {
        let mut r = rng(seed);
        let y = random_herm(&mut r, 3usize.pow(n as u32));
        let t = random_hw(&mut r, n);
        let moved = (&(&t * &y) * &t.adjoint()).hermitian_part();
        let (a, b) = (wigner_trace_norm(&moved).unwrap(), wigner_trace_norm(&y).unwrap());
        prop_assert!((a - b).abs() <= 1e-10 * b.max(1.0));
    }
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn fw_base_norm_dominates_wigner_norm(seed in any::<u64>()) {
        let mut r = rng(seed);
        let y = random_herm(&mut r, 3);
        let fw = fw_base_norm(&y, &SolverOptions::default()).unwrap().value;
        prop_assert!(fw >= wigner_trace_norm(&y).unwrap() - 1e-7);
    }
}

#[test]
fn norrell_base_norm_is_strictly_submultiplicative() {
    let opts = SolverOptions::default();
    let n = states::norrell().operator;
    let one = fw_base_norm(&n, &opts).unwrap().value;
    let two = fw_base_norm(&n.kron(&n), &opts).unwrap().value;
    assert!(one * one - two >= 0.3, "{two} vs {}", one * one);
}
