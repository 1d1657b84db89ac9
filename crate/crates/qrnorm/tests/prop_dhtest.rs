mod common;

use common::*;
use proptest::prelude::*;
use qrnorm::conic::SolverOptions;
use qrnorm::dhtest::{check_eps_delta, d_emancipated, d_emancipated_min_over_ball, d_hyp, ball_program_primal};

fn opts() -> SolverOptions {
    SolverOptions::default()
}

proptest! {
    #![proptest_config(cases(32))]

    #[test]
    fn emancipated_dominates_hypothesis_testing(seed in any::<u64>(), d in 2usize..4, eps in 0.0f64..0.6) {
        let mut r = rng(seed);
        let rho = random_state(&mut r, d);
        let sigma = random_full_state(&mut r, d);
        let h = d_hyp(&rho, &sigma, eps, &opts()).unwrap().entropy;
        let e = d_emancipated(&rho, &sigma, eps, &opts()).unwrap().entropy;
        prop_assert!(e >= h - 1e-7, "D_hbar {e} < D_H {h}");
    }

    #[test]
    fn entropies_nondecreasing_in_eps(seed in any::<u64>(), d in 2usize..4, e1 in 0.0f64..0.4, step in 0.01f64..0.4) {
        let mut r = rng(seed);
        let rho = random_state(&mut r, d);
        let sigma = random_full_state(&mut r, d);
        let e2 = e1 + step;
        for f in [d_hyp, d_emancipated] {
            let a = f(&rho, &sigma, e1, &opts()).unwrap().entropy;
            let b = f(&rho, &sigma, e2, &opts()).unwrap().entropy;
            prop_assert!(b >= a - 1e-7, "{a} at {e1} > {b} at {e2}");
        }
    }

    #[test]
    fn substitution_identity(seed in any::<u64>(), d in 2usize..4, eps in 0.0f64..0.8) {
        let mut r = rng(seed);
        let rho = random_state(&mut r, d);
        let x = random_herm(&mut r, d);
        let tight = SolverOptions { gap_tol: 1e-10, feas_tol: 1e-10, ..opts() };
        let lhs = d_emancipated(&rho, &x, eps, &tight).unwrap().inner;
        let rhs = 2.0 * d_hyp(&rho, &x, eps / 2.0, &tight).unwrap().inner - x.trace().re;
        prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn ball_program_primal_equals_dual(seed in any::<u64>(), which in 0usize..4, eps in 0.01f64..0.5) {
        let mut r = rng(seed);
        let ball = small_balls()[which];
        let rho = state_for(&mut r, ball);
        let dual = d_emancipated_min_over_ball(&rho, ball, eps, &opts()).unwrap().min_dual_norm;
        let primal = ball_program_primal(&rho, ball, eps, &opts()).unwrap();
        prop_assert!((primal - dual).abs() <= 1e-6, "{ball:?}: primal {primal} dual {dual}");
    }

    #[test]
    fn eps_delta_inequality(seed in any::<u64>(), which in 0usize..4, eps in 0.0f64..0.5, delta in 0.0f64..0.45) {
        let mut r = rng(seed);
        let ball = small_balls()[which];
        let rho = state_for(&mut r, ball);
        let c = check_eps_delta(&rho, ball, eps, delta, &opts()).unwrap();
        prop_assert!(c.holds, "{ball:?} eps={eps} delta={delta}: {} < {}", c.lhs, c.rhs);
    }
}
