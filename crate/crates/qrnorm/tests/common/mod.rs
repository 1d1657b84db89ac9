#![allow(dead_code)]

use nalgebra::DMatrix;
use qrnorm::linalg::{c, random_density, random_hermitian, random_unit_vector};
use qrnorm::Operator;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Square complex Gaussian matrix, not Hermitian.
pub fn random_general(rng: &mut ChaCha8Rng, d: usize) -> Operator {
    Operator::new(DMatrix::from_fn(d, d, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal))))
}

pub fn bipartite(op: Operator, da: usize, db: usize) -> Operator {
    op.with_dims(vec![da, db]).expect("dims")
}

pub fn random_state(rng: &mut ChaCha8Rng, d: usize) -> Operator {
    let k = rng.gen_range(1..=d);
    random_density(rng, d, k)
}

/// Full-rank state, so no test hits the zero-error degeneracy.
pub fn random_full_state(rng: &mut ChaCha8Rng, d: usize) -> Operator {
    random_density(rng, d, d)
}

pub fn random_pure(rng: &mut ChaCha8Rng, d: usize) -> Operator {
    Operator::projector(&random_unit_vector(rng, d)).hermitian_part()
}

pub fn random_herm(rng: &mut ChaCha8Rng, d: usize) -> Operator {
    random_hermitian(rng, d)
}

/// Convex mixture of up to `k` random pure product states on dA x dB.
pub fn random_separable(rng: &mut ChaCha8Rng, da: usize, db: usize, k: usize) -> Operator {
    let terms = rng.gen_range(1..=k);
    let w: Vec<f64> = (0..terms).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut acc = Operator::zeros(da * db, da * db);
    for p in w {
        let a = random_pure(rng, da);
        let b = random_pure(rng, db);
        acc = &acc + &a.kron(&b).scale(p / total);
    }
    bipartite(acc.hermitian_part(), da, db)
}

pub fn cases(n: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config { cases: n, failure_persistence: None, ..Default::default() }
}

/// The four SDP-representable balls at their smallest sizes.
pub fn small_balls() -> [qrnorm::dhtest::NormBall; 4] {
    use qrnorm::dhtest::NormBall;
    [NormBall::Negativity { da: 2, db: 2 }, NormBall::Reshuffled { da: 2, db: 2 }, NormBall::Wigner { n: 1 }, NormBall::Stabiliser { n: 1 }]
}

pub fn state_for(rng: &mut ChaCha8Rng, ball: qrnorm::dhtest::NormBall) -> Operator {
    use qrnorm::dhtest::NormBall;
    let rho = random_state(rng, ball.dim());
    match ball {
        NormBall::Negativity { da, db } | NormBall::Reshuffled { da, db } => bipartite(rho, da, db),
        _ => rho,
    }
}
