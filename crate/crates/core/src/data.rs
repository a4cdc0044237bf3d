//! Query-level ranking instances and hypothesis-class descriptions.
//!
//! One training example is a pair `(X, y)`: an `m x d` feature matrix whose
//! rows are query-document feature vectors, and an `m`-vector of relevance
//! labels. A dataset is an ordered list of such instances sharing `d`; the
//! number of documents `m` may differ per query.

use crate::error::{Error, Result};

/// Which norm constrains the weight vector (and, dually, the input rows).
///
/// `L2`: weights in an l2 ball of radius `W2`, rows bounded in l2 by `R_X`.
/// `L1`: weights in an l1 ball of radius `W1`, rows bounded in l-inf by `R_X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L2,
    L1,
}

/// One `(X, y)` pair: `m x d` features (dense, row-major) plus `m` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryInstance {
    features: Vec<f64>,
    labels: Vec<f64>,
    m: usize,
    d: usize,
}

impl QueryInstance {
    /// Builds an instance from row vectors. Rows are the atomic unit: row `j`
    /// is the feature vector of document `j`.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("instance must have at least one row".into()));
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::Empty("feature dimension must be at least 1".into()));
        }
        let m = rows.len();
        let mut features = Vec::with_capacity(m * d);
        for (j, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::ShapeMismatch(format!(
                    "row {j} has length {}, expected {d}",
                    row.len()
                )));
            }
            features.extend_from_slice(row);
        }
        Self::from_flat(features, m, d, labels)
    }

    /// Builds an instance from a row-major flat buffer of length `m * d`.
    pub fn from_flat(features: Vec<f64>, m: usize, d: usize, labels: Vec<f64>) -> Result<Self> {
        if m == 0 || d == 0 {
            return Err(Error::Empty("m and d must be at least 1".into()));
        }
        if features.len() != m * d {
            return Err(Error::ShapeMismatch(format!(
                "feature buffer has {} entries, expected {}",
                features.len(),
                m * d
            )));
        }
        if labels.len() != m {
            return Err(Error::ShapeMismatch(format!(
                "labels have length {}, expected m = {m}",
                labels.len()
            )));
        }
        if let Some(bad) = features.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("feature entry {bad}")));
        }
        if let Some(bad) = labels.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("label entry {bad}")));
        }
        Ok(Self { features, labels, m, d })
    }

    pub fn num_docs(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.features[j * self.d..(j + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.d)
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn max_label(&self) -> f64 {
        self.labels.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// An ordered collection of query instances with a shared feature dimension.
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    instances: Vec<QueryInstance>,
    d: usize,
}

impl Dataset {
    pub fn new(instances: Vec<QueryInstance>) -> Result<Self> {
        let Some(first) = instances.first() else {
            return Err(Error::Empty("dataset must contain at least one instance".into()));
        };
        let d = first.dim();
        for (i, inst) in instances.iter().enumerate() {
            if inst.dim() != d {
                return Err(Error::ShapeMismatch(format!(
                    "instance {i} has dimension {}, expected {d}",
                    inst.dim()
                )));
            }
        }
        Ok(Self { instances, d })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn instance(&self, i: usize) -> &QueryInstance {
        &self.instances[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, QueryInstance> {
        self.instances.iter()
    }

    pub fn into_instances(self) -> Vec<QueryInstance> {
        self.instances
    }
}

/// Hypothesis-class description: an l2 or l1 weight ball together with the
/// matching bound on input rows (l2 rows for `L2`, l-inf rows for `L1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassSpec {
    pub norm_kind: NormKind,
    pub weight_radius: f64,
    pub input_radius: f64,
}

impl ClassSpec {
    pub fn new(norm_kind: NormKind, weight_radius: f64, input_radius: f64) -> Result<Self> {
        if !(weight_radius > 0.0) || !weight_radius.is_finite() {
            return Err(Error::InvalidParam(format!(
                "weight_radius must be positive and finite, got {weight_radius}"
            )));
        }
        if !(input_radius > 0.0) || !input_radius.is_finite() {
            return Err(Error::InvalidParam(format!(
                "input_radius must be positive and finite, got {input_radius}"
            )));
        }
        Ok(Self { norm_kind, weight_radius, input_radius })
    }

    pub fn l2(weight_radius: f64, input_radius: f64) -> Result<Self> {
        Self::new(NormKind::L2, weight_radius, input_radius)
    }

    pub fn l1(weight_radius: f64, input_radius: f64) -> Result<Self> {
        Self::new(NormKind::L1, weight_radius, input_radius)
    }
}

/// Largest row norm over the whole dataset: row l2 norms for `NormKind::L2`,
/// row l-inf norms for `NormKind::L1`. This is the empirical input radius
/// the bound formulas expect.
pub fn input_radius(dataset: &Dataset, kind: NormKind) -> f64 {
    let mut best: f64 = 0.0;
    for inst in dataset.iter() {
        for row in inst.rows() {
            let norm = match kind {
                NormKind::L2 => row.iter().map(|x| x * x).sum::<f64>().sqrt(),
                NormKind::L1 => row.iter().fold(0.0_f64, |acc, x| acc.max(x.abs())),
            };
            best = best.max(norm);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(rows: Vec<Vec<f64>>, labels: Vec<f64>) -> QueryInstance {
        QueryInstance::from_rows(rows, labels).unwrap()
    }

    #[test]
    fn rejects_label_length_mismatch() {
        let err = QueryInstance::from_rows(vec![vec![1.0, 2.0]], vec![1.0, 0.0]);
        assert!(matches!(err, Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn rejects_non_finite_features() {
        let err = QueryInstance::from_rows(vec![vec![f64::NAN]], vec![0.0]);
        assert!(matches!(err, Err(Error::NonFinite(_))));
    }

    #[test]
    fn rejects_ragged_rows() {
        let err = QueryInstance::from_rows(vec![vec![1.0, 2.0], vec![3.0]], vec![0.0, 1.0]);
        assert!(matches!(err, Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn dataset_requires_shared_dimension() {
        let a = inst(vec![vec![1.0, 0.0]], vec![1.0]);
        let b = inst(vec![vec![1.0]], vec![1.0]);
        assert!(matches!(Dataset::new(vec![a, b]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn dataset_allows_varying_m() {
        let a = inst(vec![vec![1.0, 0.0]], vec![1.0]);
        let b = inst(vec![vec![0.0, 1.0], vec![1.0, 1.0]], vec![0.0, 2.0]);
        let ds = Dataset::new(vec![a, b]).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.instance(1).num_docs(), 2);
    }

    #[test]
    fn input_radius_l2_is_max_row_l2() {
        let a = inst(vec![vec![3.0, 4.0]], vec![1.0]);
        let ds = Dataset::new(vec![a]).unwrap();
        assert_eq!(input_radius(&ds, NormKind::L2), 5.0);
    }

    #[test]
    fn input_radius_l1_kind_is_max_abs_entry() {
        let a = inst(vec![vec![3.0, 4.0], vec![0.0, 5.0]], vec![1.0, 0.0]);
        let ds = Dataset::new(vec![a]).unwrap();
        assert_eq!(input_radius(&ds, NormKind::L1), 5.0);
    }

    #[test]
    fn input_radius_takes_max_over_instances() {
        let a = inst(vec![vec![1.0, 0.0]], vec![0.0]);
        let b = inst(vec![vec![0.0, 2.0]], vec![0.0]);
        let ds = Dataset::new(vec![a.clone()]).unwrap();
        let r1 = input_radius(&ds, NormKind::L2);
        let ds2 = Dataset::new(vec![a, b]).unwrap();
        let r2 = input_radius(&ds2, NormKind::L2);
        assert_eq!(r1, 1.0);
        assert_eq!(r2, 2.0);
        assert!(r2 >= r1, "adding an instance must not decrease the radius");
    }

    #[test]
    fn class_spec_rejects_nonpositive_radii() {
        assert!(ClassSpec::l2(0.0, 1.0).is_err());
        assert!(ClassSpec::l2(1.0, -2.0).is_err());
    }
}
