//! NDCG@k evaluation utility.

use crate::error::{Error, Result};
use crate::scoring::rank_from_scores;

/// Gain of a relevance grade: `2^t - 1`.
pub fn gain(t: f64) -> f64 {
    2.0_f64.powf(t) - 1.0
}

/// Position discount: `1 / log2(1 + i)` for 1-based position `i`.
pub fn discount(i: usize) -> f64 {
    1.0 / (1.0 + i as f64).log2()
}

fn dcg_at_k(order: &[usize], y: &[f64], k: usize) -> f64 {
    order
        .iter()
        .take(k)
        .enumerate()
        .map(|(pos, &doc)| gain(y[doc]) * discount(pos + 1))
        .sum()
}

/// NDCG@k of the ranking induced by the scores `s` against labels `y`.
///
/// By convention returns 1.0 when the ideal DCG is zero (all labels carry
/// zero gain), so the metric is always defined.
pub fn ndcg_at_k(s: &[f64], y: &[f64], k: usize) -> Result<f64> {
    if s.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "scores have length {}, labels {}",
            s.len(),
            y.len()
        )));
    }
    if k == 0 || k > s.len() {
        return Err(Error::InvalidParam(format!(
            "k = {k} out of range for m = {}",
            s.len()
        )));
    }
    let order = rank_from_scores(s)?;
    let ideal = rank_from_scores(y)?;
    let idcg = dcg_at_k(&ideal, y, k);
    if idcg <= 0.0 {
        return Ok(1.0);
    }
    Ok(dcg_at_k(&order, y, k) / idcg)
}
