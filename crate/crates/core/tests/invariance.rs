//! Permutation-equivariance laws of the linear scoring class, and the
//! non-invariance of generic full linear maps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rankbench_core::{
    apply_permutation, check_invariance, check_invariance_of, rank_from_scores, score,
    FullLinearMap, Permutation, QueryInstance, ScoringParams,
};

fn random_instance<R: Rng>(m: usize, d: usize, rng: &mut R) -> QueryInstance {
    let rows = (0..m)
        .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let labels = (0..m).map(|_| rng.gen_range(0..4) as f64).collect();
    QueryInstance::from_rows(rows, labels).unwrap()
}

#[test]
fn shifted_linear_class_is_equivariant_over_1000_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let m = rng.gen_range(2..=10);
        let d = rng.gen_range(1..=6);
        let inst = random_instance(m, d, &mut rng);
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let params = ScoringParams::with_shift(w, v);
        let perm = Permutation::random(m, &mut rng);
        let rep = check_invariance(&params, &inst, &perm).unwrap();
        assert!(rep.invariant, "deviation {} at m={m} d={d}", rep.max_deviation);
    }
}

#[test]
fn ranking_ignores_the_shift_direction() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..1000 {
        let m = rng.gen_range(2..=10);
        let d = rng.gen_range(1..=6);
        let inst = random_instance(m, d, &mut rng);
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let with_shift = score(&ScoringParams::with_shift(w.clone(), v), &inst).unwrap();
        let plain = score(&ScoringParams::new(w), &inst).unwrap();
        assert_eq!(
            rank_from_scores(&with_shift).unwrap(),
            rank_from_scores(&plain).unwrap()
        );
    }
}

#[test]
fn generic_full_linear_maps_all_fail_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut failures = 0;
    for _ in 0..100 {
        let m = rng.gen_range(2..=6);
        let d = rng.gen_range(1..=4);
        let map = FullLinearMap::random(m, d, &mut rng);
        let inst = random_instance(m, d, &mut rng);
        // a non-identity permutation; random ones can be the identity
        let perm = Permutation::swap(m, 0, 1);
        let rep = check_invariance_of(|i| map.score(i), &inst, &perm).unwrap();
        if !rep.invariant {
            failures += 1;
        }
    }
    assert_eq!(failures, 100, "a generic full map must break equivariance");
}

#[test]
fn permutation_composition_against_direct_application() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let m = rng.gen_range(2..=8);
        let inst = random_instance(m, 3, &mut rng);
        let p = Permutation::random(m, &mut rng);
        let q = Permutation::random(m, &mut rng);
        // apply p then q equals applying the composite in one go
        let step = apply_permutation(&q, &apply_permutation(&p, &inst).unwrap()).unwrap();
        let composite =
            Permutation::new(q.image().iter().map(|&j| p.image()[j]).collect()).unwrap();
        let direct = apply_permutation(&composite, &inst).unwrap();
        assert_eq!(step, direct);
    }
}
