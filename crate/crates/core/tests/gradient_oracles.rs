//! Closed-form gradients and Hessians against central finite differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rankbench_core::verify::{finite_diff_gradient, finite_diff_gradient_of, ranksvm_off_kink};
use rankbench_core::{LossFn, SurrogateLoss};

fn rel_err(observed: &[f64], reference: &[f64]) -> f64 {
    let scale = 1.0 + reference.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    observed
        .iter()
        .zip(reference)
        .fold(0.0_f64, |a, (o, r)| a.max((o - r).abs()))
        / scale
}

fn check_gradients(loss: &SurrogateLoss, points: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    while checked < points {
        let m = rng.gen_range(1..=64);
        let s: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let y: Vec<f64> = (0..m).map(|_| rng.gen_range(0..5) as f64).collect();
        if matches!(loss, SurrogateLoss::RankSvm) && !ranksvm_off_kink(&s, &y, 1e-6) {
            continue;
        }
        let fd = finite_diff_gradient(loss, &s, &y, 1e-6).unwrap();
        let closed = loss.gradient(&s, &y).unwrap();
        let err = rel_err(&fd, &closed);
        assert!(err < 1e-5, "{} at m={m}: rel err {err}", loss.name());
        checked += 1;
    }
}

#[test]
fn listnet_gradient_matches_finite_differences() {
    check_gradients(&SurrogateLoss::ListNet, 300, 11);
}

#[test]
fn sdcg_gradient_matches_finite_differences() {
    check_gradients(&SurrogateLoss::smooth_dcg1(0.7, 4).unwrap(), 300, 12);
    check_gradients(&SurrogateLoss::smooth_dcg1(3.0, 4).unwrap(), 100, 13);
}

#[test]
fn ranksvm_subgradient_matches_derivative_off_kinks() {
    check_gradients(&SurrogateLoss::RankSvm, 300, 14);
}

#[test]
fn hessians_match_finite_differences_of_the_gradient() {
    let losses = [
        SurrogateLoss::ListNet,
        SurrogateLoss::smooth_dcg1(0.8, 3).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for loss in &losses {
        for _ in 0..60 {
            let m = rng.gen_range(1..=10);
            let s: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let y: Vec<f64> = (0..m).map(|_| rng.gen_range(0..4) as f64).collect();
            let h = loss.hessian(&s, &y).unwrap();
            // row j of the Hessian is the gradient of grad_j
            for j in 0..m {
                let fd_row =
                    finite_diff_gradient_of(|p| loss.grad(p, &y)[j], &s, 1e-6);
                for k in 0..m {
                    let diff = (h[j][k] - fd_row[k]).abs();
                    assert!(
                        diff <= 1e-5 * (1.0 + h[j][k].abs()),
                        "{} H[{j}][{k}]: {} vs fd {}",
                        loss.name(),
                        h[j][k],
                        fd_row[k]
                    );
                }
            }
        }
    }
}

#[test]
fn hessian_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for loss in [
        SurrogateLoss::ListNet,
        SurrogateLoss::smooth_dcg1(1.3, 4).unwrap(),
    ] {
        for _ in 0..50 {
            let m = rng.gen_range(2..=9);
            let s: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let y: Vec<f64> = (0..m).map(|_| rng.gen_range(0..4) as f64).collect();
            let h = loss.hessian(&s, &y).unwrap();
            for j in 0..m {
                for k in 0..m {
                    assert!((h[j][k] - h[k][j]).abs() < 1e-12);
                }
            }
        }
    }
}
