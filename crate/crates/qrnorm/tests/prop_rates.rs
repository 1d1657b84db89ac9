mod common;

use common::*;
use proptest::prelude::*;
use qrnorm::conic::SolverOptions;
use qrnorm::dhtest::{NormBall, NormTag};
use qrnorm::rates::{
    build_one_shot_map, cost_lower_bound, distillable_upper_bound, normalised_distillation_test, MapIngredients, Regularisation, CONTRACTION_TOL,
};
use qrnorm::{states, Operator};
use rand_chacha::ChaCha8Rng;

/// A random state and a target resource state for a closed-form norm.
fn instance(r: &mut ChaCha8Rng, norm: NormTag) -> (Operator, Operator) {
    match norm {
        NormTag::Negativity | NormTag::ReshuffledNegativity => (bipartite(random_state(r, 4), 2, 2), states::max_entangled(2).unwrap()),
        NormTag::Wigner => (random_state(r, 3), states::h_plus().operator),
        _ => (random_state(r, 2), states::t_state().operator),
    }
}

const CLOSED: [NormTag; 4] = [NormTag::Negativity, NormTag::ReshuffledNegativity, NormTag::Wigner, NormTag::StabiliserP];

/// X scaled onto the feasibility boundary of a dilution map from phi.
fn dilution_image(x: &Operator, phi: &Operator, norm: NormTag) -> Operator {
    let dual = norm.ball(phi).unwrap().dual_norm(phi).unwrap();
    let xn = norm.ball(x).unwrap().primal_norm(x).unwrap();
    let s = (1.0 / (dual * xn)).min(1.0 / (phi.op_norm() * x.trace_norm()));
    x.scale(s)
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn reports_reevaluate_bitwise(seed in any::<u64>(), wig in any::<bool>()) {
        let mut r = rng(seed);
        let opts = SolverOptions::default();
        let (rho, phi, ball, mu) = if wig {
            let (rho, phi) = instance(&mut r, NormTag::Wigner);
            (rho, phi, NormBall::Wigner { n: 1 }, NormTag::FwBase)
        } else {
            let (rho, phi) = instance(&mut r, NormTag::Negativity);
            (rho, phi, NormBall::Negativity { da: 2, db: 2 }, NormTag::SepBase)
        };
        let reg = if wig { Regularisation::Copies(1) } else { Regularisation::Limit };
        let c = cost_lower_bound(&rho, &phi, ball, mu, reg, &opts).unwrap();
        prop_assert_eq!(c.reevaluate().to_bits(), c.bound.to_bits());
        prop_assert_eq!(c.reevaluate_rate().to_bits(), c.rate_bound.to_bits());
        let tag = if wig { NormTag::Wigner } else { NormTag::Negativity };
        let d = distillable_upper_bound(&rho, &phi, tag, false, &opts).unwrap();
        prop_assert_eq!(d.reevaluate().to_bits(), d.bound.to_bits());
        // infinite only through an infinite ingredient or a vanishing denominator
        let den = d.ingredients[1].value;
        prop_assert!(d.bound.is_finite() || d.ingredients.iter().any(|i| !i.value.is_finite()) || den <= 1e-12);
        prop_assert!(c.bound.is_finite() || c.ingredients.iter().any(|i| !i.value.is_finite()) || c.ingredients[1].value <= 1e-12);
    }

    #[test]
    fn dilution_maps_contract(seed in any::<u64>(), which in 0usize..4) {
        let mut r = rng(seed);
        let norm = CLOSED[which];
        let (rho, phi) = instance(&mut r, norm);
        let x = dilution_image(&rho, &phi, norm);
        let (_, cert) = build_one_shot_map(MapIngredients::Dilution { phi, x }, norm, None, 0.0, 100, seed).unwrap();
        prop_assert!(cert.passed, "{cert:?}");
        prop_assert!(cert.max_ratio_trace <= 1.0 + CONTRACTION_TOL && cert.max_ratio_mu <= 1.0 + CONTRACTION_TOL);
    }

    #[test]
    fn distillation_maps_contract(seed in any::<u64>(), which in 0usize..4) {
        let mut r = rng(seed);
        let norm = CLOSED[which];
        let (rho, phi) = instance(&mut r, norm);
        let w = random_herm(&mut r, rho.rows()).with_dims(rho.dims().to_vec()).unwrap();
        let q = normalised_distillation_test(&w, &phi, norm).unwrap();
        let (_, cert) = build_one_shot_map(MapIngredients::Distillation { q, phi }, norm, None, 0.0, 100, seed).unwrap();
        prop_assert!(cert.passed, "{cert:?}");
    }
}
