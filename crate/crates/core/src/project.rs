//! Euclidean projections onto the l2 and l1 balls used by the trainers.

use crate::data::NormKind;

/// Radial projection onto the l2 ball of the given radius.
pub fn project_l2(w: &[f64], radius: f64) -> Vec<f64> {
    assert!(radius > 0.0, "radius must be positive");
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= radius {
        w.to_vec()
    } else {
        let scale = radius / norm;
        w.iter().map(|x| x * scale).collect()
    }
}

/// Exact Euclidean projection onto the l1 ball, by the sort-based threshold
/// method: the projection is the soft-thresholding `sign(w_i) max(|w_i| - t, 0)`
/// where `t` is chosen so the result has l1 norm equal to the radius.
/// O(d log d).
pub fn project_l1(w: &[f64], radius: f64) -> Vec<f64> {
    assert!(radius > 0.0, "radius must be positive");
    let l1: f64 = w.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return w.to_vec();
    }
    let mut mags: Vec<f64> = w.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in mags.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - radius) / (k as f64 + 1.0);
        if u > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    w.iter()
        .map(|&x| x.signum() * (x.abs() - theta).max(0.0))
        .collect()
}

/// Projection onto the ball selected by a `NormKind`.
pub fn project_ball(kind: NormKind, w: &[f64], radius: f64) -> Vec<f64> {
    match kind {
        NormKind::L2 => project_l2(w, radius),
        NormKind::L1 => project_l1(w, radius),
    }
}

pub fn norm_l2(w: &[f64]) -> f64 {
    w.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm_l1(w: &[f64]) -> f64 {
    w.iter().map(|x| x.abs()).sum()
}

pub fn norm_linf(w: &[f64]) -> f64 {
    w.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn ball_norm(kind: NormKind, w: &[f64]) -> f64 {
    match kind {
        NormKind::L2 => norm_l2(w),
        NormKind::L1 => norm_l1(w),
    }
}
