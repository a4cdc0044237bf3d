//! Linear scoring of query instances and permutation machinery.
//!
//! The scorers here realize the permutation-invariant linear class
//!
//! ```text
//! X -> Xw + (1'Xv) 1
//! ```
//!
//! where the `v` term shifts every score by the same constant and therefore
//! never changes the sorted order. Plain `X -> Xw` is the `v`-absent special
//! case, and is the only form the trainers ever fit.

use crate::data::QueryInstance;
use crate::error::{Error, Result};
use rand::Rng;

/// Weights of a linear scorer; `v` is the rank-redundant direction that only
/// invariance tests exercise.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoringParams {
    pub w: Vec<f64>,
    pub v: Option<Vec<f64>>,
}

impl ScoringParams {
    pub fn new(w: Vec<f64>) -> Self {
        Self { w, v: None }
    }

    pub fn with_shift(w: Vec<f64>, v: Vec<f64>) -> Self {
        Self { w, v: Some(v) }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Scores an instance: `Xw`, plus `(1'Xv) 1` when `v` is present.
pub fn score(params: &ScoringParams, instance: &QueryInstance) -> Result<Vec<f64>> {
    let d = instance.dim();
    if params.w.len() != d {
        return Err(Error::ShapeMismatch(format!(
            "weight length {} does not match feature dimension {d}",
            params.w.len()
        )));
    }
    if let Some(v) = &params.v {
        if v.len() != d {
            return Err(Error::ShapeMismatch(format!(
                "shift length {} does not match feature dimension {d}",
                v.len()
            )));
        }
    }
    let mut s: Vec<f64> = instance.rows().map(|row| dot(row, &params.w)).collect();
    if let Some(v) = &params.v {
        let shift: f64 = instance.rows().map(|row| dot(row, v)).sum();
        for x in &mut s {
            *x += shift;
        }
    }
    Ok(s)
}

/// A permutation of degree `m`, stored as the image `j -> perm(j)`.
/// Acting on a vector: `(pi s)_j = s_{perm(j)}`; acting on an instance it
/// permutes rows and labels the same way.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let m = image.len();
        let mut seen = vec![false; m];
        for &j in &image {
            if j >= m || seen[j] {
                return Err(Error::InvalidParam(format!(
                    "not a permutation of degree {m}: {image:?}"
                )));
            }
            seen[j] = true;
        }
        Ok(Self(image))
    }

    pub fn identity(m: usize) -> Self {
        Self((0..m).collect())
    }

    /// Transposition of positions `a` and `b` (0-based).
    pub fn swap(m: usize, a: usize, b: usize) -> Self {
        let mut image: Vec<usize> = (0..m).collect();
        image.swap(a, b);
        Self(image)
    }

    pub fn random<R: Rng>(m: usize, rng: &mut R) -> Self {
        let mut image: Vec<usize> = (0..m).collect();
        // Fisher-Yates
        for i in (1..m).rev() {
            let j = rng.gen_range(0..=i);
            image.swap(i, j);
        }
        Self(image)
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn image(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0usize; self.0.len()];
        for (j, &pj) in self.0.iter().enumerate() {
            inv[pj] = j;
        }
        Self(inv)
    }

    pub fn apply_to_slice(&self, s: &[f64]) -> Vec<f64> {
        self.0.iter().map(|&j| s[j]).collect()
    }
}

/// Permutes the rows (and labels) of an instance.
pub fn apply_permutation(perm: &Permutation, instance: &QueryInstance) -> Result<QueryInstance> {
    let m = instance.num_docs();
    if perm.degree() != m {
        return Err(Error::ShapeMismatch(format!(
            "permutation degree {} does not match m = {m}",
            perm.degree()
        )));
    }
    let rows: Vec<Vec<f64>> = perm.image().iter().map(|&j| instance.row(j).to_vec()).collect();
    let labels = perm.apply_to_slice(instance.labels());
    QueryInstance::from_rows(rows, labels)
}

/// Outcome of a permutation-equivariance check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceReport {
    pub invariant: bool,
    pub max_deviation: f64,
}

/// Checks `pi f(X) = f(pi X)` for an arbitrary vector-valued scorer, within
/// `1e-12 * (1 + max |score|)`.
pub fn check_invariance_of<F>(
    scorer: F,
    instance: &QueryInstance,
    perm: &Permutation,
) -> Result<InvarianceReport>
where
    F: Fn(&QueryInstance) -> Result<Vec<f64>>,
{
    let s = scorer(instance)?;
    let permuted_scores = perm.apply_to_slice(&s);
    let permuted_instance = apply_permutation(perm, instance)?;
    let s_of_permuted = scorer(&permuted_instance)?;
    if permuted_scores.len() != s_of_permuted.len() {
        return Err(Error::ShapeMismatch("scorer changed output length".into()));
    }
    let scale = s.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    let max_deviation = permuted_scores
        .iter()
        .zip(&s_of_permuted)
        .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
    Ok(InvarianceReport {
        invariant: max_deviation <= 1e-12 * (1.0 + scale),
        max_deviation,
    })
}

/// Checks permutation equivariance of a linear scorer, which holds for every
/// member of the `Xw + (1'Xv) 1` class.
pub fn check_invariance(
    params: &ScoringParams,
    instance: &QueryInstance,
    perm: &Permutation,
) -> Result<InvarianceReport> {
    check_invariance_of(|inst| score(params, inst), instance, perm)
}

/// A fully general linear map `X -> (<X, W_1>, ..., <X, W_m>)` with one
/// `m x d` coefficient matrix per output coordinate. Generic members of this
/// class are *not* permutation invariant; it exists as the counterexample
/// family for the invariance checks.
#[derive(Debug, Clone)]
pub struct FullLinearMap {
    /// `coeffs[i]` is the flattened `m x d` matrix for output `i`.
    coeffs: Vec<Vec<f64>>,
    m: usize,
    d: usize,
}

impl FullLinearMap {
    pub fn new(coeffs: Vec<Vec<f64>>, m: usize, d: usize) -> Result<Self> {
        if coeffs.len() != m {
            return Err(Error::ShapeMismatch(format!(
                "need one coefficient matrix per output: got {}, expected {m}",
                coeffs.len()
            )));
        }
        for (i, c) in coeffs.iter().enumerate() {
            if c.len() != m * d {
                return Err(Error::ShapeMismatch(format!(
                    "coefficient matrix {i} has {} entries, expected {}",
                    c.len(),
                    m * d
                )));
            }
        }
        Ok(Self { coeffs, m, d })
    }

    pub fn random<R: Rng>(m: usize, d: usize, rng: &mut R) -> Self {
        let coeffs = (0..m)
            .map(|_| (0..m * d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        Self { coeffs, m, d }
    }

    pub fn score(&self, instance: &QueryInstance) -> Result<Vec<f64>> {
        if instance.num_docs() != self.m || instance.dim() != self.d {
            return Err(Error::ShapeMismatch(format!(
                "instance is {}x{}, map expects {}x{}",
                instance.num_docs(),
                instance.dim(),
                self.m,
                self.d
            )));
        }
        Ok(self
            .coeffs
            .iter()
            .map(|c| {
                instance
                    .rows()
                    .enumerate()
                    .map(|(j, row)| dot(row, &c[j * self.d..(j + 1) * self.d]))
                    .sum()
            })
            .collect())
    }
}

/// Ranks documents by descending score; ties broken by ascending original
/// index (stable). Returns the document indices in ranked order.
pub fn rank_from_scores(s: &[f64]) -> Result<Vec<usize>> {
    if let Some(bad) = s.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("score entry {bad}")));
    }
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap().then(a.cmp(&b)));
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn inst(rows: Vec<Vec<f64>>, labels: Vec<f64>) -> QueryInstance {
        QueryInstance::from_rows(rows, labels).unwrap()
    }

    #[test]
    fn score_identity_features() {
        let x = inst(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0]);
        let p = ScoringParams::new(vec![1.0, 2.0]);
        assert_eq!(score(&p, &x).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn score_with_shift_moves_all_entries_equally() {
        let x = inst(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0]);
        let p = ScoringParams::with_shift(vec![1.0, 2.0], vec![1.0, 0.0]);
        let s = score(&p, &x).unwrap();
        assert_eq!(s, vec![2.0, 3.0]);
        assert_eq!(
            rank_from_scores(&s).unwrap(),
            rank_from_scores(&[1.0, 2.0]).unwrap()
        );
    }

    #[test]
    fn score_matches_per_row_dot_products() {
        let rows = vec![vec![3.0, 4.0], vec![0.0, 5.0], vec![1.0, 1.0]];
        let x = inst(rows.clone(), vec![0.0; 3]);
        let w = vec![1.0, 1.0];
        let s = score(&ScoringParams::new(w.clone()), &x).unwrap();
        for (j, row) in rows.iter().enumerate() {
            let expect: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
            assert_relative_eq!(s[j], expect, max_relative = 1e-15);
        }
        assert_eq!(s, vec![7.0, 5.0, 2.0]);
    }

    #[test]
    fn score_rejects_dimension_mismatch() {
        let x = inst(vec![vec![1.0, 0.0]], vec![0.0]);
        assert!(score(&ScoringParams::new(vec![1.0]), &x).is_err());
    }

    #[test]
    fn permutation_identity_and_swap() {
        let x = inst(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 0.0]);
        let id = Permutation::identity(2);
        assert_eq!(apply_permutation(&id, &x).unwrap(), x);
        let sw = Permutation::swap(2, 0, 1);
        let y = apply_permutation(&sw, &x).unwrap();
        assert_eq!(y.row(0), &[0.0, 1.0]);
        assert_eq!(y.row(1), &[1.0, 0.0]);
        assert_eq!(y.labels(), &[0.0, 1.0]);
    }

    #[test]
    fn permutation_inverse_round_trips() {
        let x = inst(
            vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
            vec![0.0, 1.0, 2.0, 3.0],
        );
        let p = Permutation::new(vec![2, 0, 3, 1]).unwrap();
        let back = apply_permutation(&p.inverse(), &apply_permutation(&p, &x).unwrap()).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn permutation_degree_mismatch_is_error() {
        let x = inst(vec![vec![1.0], vec![2.0]], vec![0.0, 1.0]);
        let p = Permutation::identity(3);
        assert!(apply_permutation(&p, &x).is_err());
    }

    #[test]
    fn linear_class_is_permutation_invariant() {
        let x = inst(vec![vec![1.0, 2.0], vec![-0.5, 0.25]], vec![0.0, 0.0]);
        let p = ScoringParams::with_shift(vec![0.3, -1.0], vec![2.0, 0.7]);
        let rep = check_invariance(&p, &x, &Permutation::swap(2, 0, 1)).unwrap();
        assert!(rep.invariant, "deviation {}", rep.max_deviation);
    }

    #[test]
    fn constant_scorer_is_invariant() {
        // w = 0 with v nonzero scores every document identically.
        let x = inst(vec![vec![1.0, 2.0], vec![3.0, 4.0]], vec![0.0, 0.0]);
        let p = ScoringParams::with_shift(vec![0.0, 0.0], vec![1.0, -2.0]);
        let rep = check_invariance(&p, &x, &Permutation::swap(2, 0, 1)).unwrap();
        assert!(rep.invariant);
    }

    #[test]
    fn full_linear_map_witness_breaks_invariance() {
        // W_1 has a single 1 in its top-left entry, W_2 = 0, X = [[1],[2]].
        // By hand: f(X) = (1, 0), so pi f(X) = (0, 1); f(pi X) = (2, 0).
        // Max deviation = max(|0-2|, |1-0|) = 2.
        let map = FullLinearMap::new(vec![vec![1.0, 0.0], vec![0.0, 0.0]], 2, 1).unwrap();
        let x = inst(vec![vec![1.0], vec![2.0]], vec![0.0, 0.0]);
        assert_eq!(map.score(&x).unwrap(), vec![1.0, 0.0]);
        let rep =
            check_invariance_of(|i| map.score(i), &x, &Permutation::swap(2, 0, 1)).unwrap();
        assert!(!rep.invariant);
        assert_relative_eq!(rep.max_deviation, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn rank_sorts_descending_with_index_tie_break() {
        assert_eq!(rank_from_scores(&[0.1, 0.9, 0.5]).unwrap(), vec![1, 2, 0]);
        assert_eq!(rank_from_scores(&[0.5, 0.5]).unwrap(), vec![0, 1]);
        assert_eq!(rank_from_scores(&[-1.0, -2.0, -3.0]).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn rank_rejects_non_finite() {
        assert!(rank_from_scores(&[0.0, f64::NAN]).is_err());
    }
}
