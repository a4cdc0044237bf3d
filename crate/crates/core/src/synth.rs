//! Synthetic ranking data with controlled geometry.
//!
//! Rows are drawn exactly on the configured radius surface (l2 sphere or
//! cube surface), so the input-radius constant entering the bound formulas
//! is the true one, with no slack.
//!
//! Label modes:
//!
//! * `Realizable`: grades are quantile buckets of `<X_j, w_true>` (thresholds
//!   frozen per seed from a large calibration draw). For l2 rows, each row is
//!   then rotated within the sphere so that `<X_j, w_true>` lands exactly on
//!   an affine per-grade representative score. That makes `w_true / a`
//!   (exposed as the oracle comparator) score every document as its grade
//!   plus a constant: RankSVM at the oracle has exactly zero loss, and the
//!   floor-adjusted ListNet loss at the oracle is exactly zero, which is
//!   what the optimistic-rate experiments need.
//! * `Noisy`: realizable, then each grade is resampled uniformly with
//!   probability `flip_prob`.
//! * `Random`: uniform grades, rows untouched.

use crate::data::{Dataset, QueryInstance};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Geometry of generated feature rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowNorm {
    /// Uniform on the l2 sphere of the given radius.
    L2,
    /// Uniform on the surface of the l-inf cube of the given radius.
    Linf,
}

#[derive(Debug, Clone)]
pub enum LabelMode {
    Realizable { w_true: Vec<f64>, y_max: u32 },
    Noisy { w_true: Vec<f64>, y_max: u32, flip_prob: f64 },
    Random { y_max: u32 },
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub m: usize,
    pub d: usize,
    pub n: usize,
    pub input_radius: f64,
    pub row_norm: RowNorm,
    pub label_mode: LabelMode,
    pub seed: u64,
}

/// Byproducts of generation that the experiments need: the frozen quantile
/// thresholds, the per-grade representative scores, and the weight vector
/// that exactly realizes the labels (l2 realizable/noisy modes only).
#[derive(Debug, Clone, Default)]
pub struct SynthMeta {
    pub thresholds: Vec<f64>,
    pub grade_scores: Vec<f64>,
    /// `w_true / a`: scores every document as its (pre-flip) grade plus a
    /// constant. `None` when no alignment is available (random labels or
    /// cube-surface rows).
    pub oracle_weights: Option<Vec<f64>>,
}

fn validate(cfg: &SynthConfig) -> Result<()> {
    if cfg.m < 1 || cfg.d < 1 || cfg.n < 1 {
        return Err(Error::InvalidParam("m, d, n must all be >= 1".into()));
    }
    if !(cfg.input_radius > 0.0) || !cfg.input_radius.is_finite() {
        return Err(Error::InvalidParam("input_radius must be positive".into()));
    }
    let check_w = |w: &Vec<f64>| -> Result<()> {
        if w.len() != cfg.d {
            return Err(Error::ShapeMismatch(format!(
                "w_true has length {}, expected d = {}",
                w.len(),
                cfg.d
            )));
        }
        if w.iter().map(|x| x * x).sum::<f64>() == 0.0 {
            return Err(Error::InvalidParam("w_true must be nonzero".into()));
        }
        Ok(())
    };
    match &cfg.label_mode {
        LabelMode::Realizable { w_true, .. } => check_w(w_true)?,
        LabelMode::Noisy { w_true, flip_prob, .. } => {
            check_w(w_true)?;
            if !(0.0..=1.0).contains(flip_prob) {
                return Err(Error::InvalidParam(format!(
                    "flip_prob must lie in [0, 1], got {flip_prob}"
                )));
            }
        }
        LabelMode::Random { .. } => {}
    }
    Ok(())
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn sample_row<R: Rng>(cfg: &SynthConfig, rng: &mut R) -> Vec<f64> {
    match cfg.row_norm {
        RowNorm::L2 => loop {
            let raw: Vec<f64> = (0..cfg.d).map(|_| standard_normal(rng)).collect();
            let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                return raw.iter().map(|x| x * cfg.input_radius / norm).collect();
            }
        },
        RowNorm::Linf => {
            let mut row: Vec<f64> = (0..cfg.d)
                .map(|_| rng.gen_range(-cfg.input_radius..cfg.input_radius))
                .collect();
            let face = rng.gen_range(0..cfg.d);
            row[face] = if rng.gen::<bool>() { cfg.input_radius } else { -cfg.input_radius };
            row
        }
    }
}

struct Alignment {
    w_true: Vec<f64>,
    w_norm: f64,
    thresholds: Vec<f64>,
    grade_scores: Vec<f64>,
    snap: bool,
}

impl Alignment {
    /// Quantile thresholds from a frozen calibration draw, plus affine
    /// representative scores spanning 90% of the attainable dot-product
    /// range so every grade's score stays strictly inside the sphere.
    fn build(cfg: &SynthConfig, w_true: &[f64], y_max: u32, rng: &mut ChaCha8Rng) -> Self {
        let w_norm = w_true.iter().map(|x| x * x).sum::<f64>().sqrt();
        let grades = y_max as usize + 1;
        let mut calib: Vec<f64> = (0..100_000)
            .map(|_| {
                let row = sample_row(cfg, rng);
                row.iter().zip(w_true).map(|(a, b)| a * b).sum()
            })
            .collect();
        calib.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let thresholds: Vec<f64> = (1..grades)
            .map(|k| calib[k * calib.len() / grades])
            .collect();
        let half_span = match cfg.row_norm {
            RowNorm::L2 => 0.9 * cfg.input_radius * w_norm,
            // no snapping for cube-surface rows; scores kept for reporting
            RowNorm::Linf => 0.9 * cfg.input_radius * w_true.iter().map(|x| x.abs()).sum::<f64>(),
        };
        let grade_scores: Vec<f64> = if y_max == 0 {
            vec![0.0]
        } else {
            (0..grades)
                .map(|k| -half_span + 2.0 * half_span * k as f64 / y_max as f64)
                .collect()
        };
        Alignment {
            w_true: w_true.to_vec(),
            w_norm,
            thresholds,
            grade_scores,
            snap: cfg.row_norm == RowNorm::L2,
        }
    }

    fn grade_of(&self, dot: f64) -> usize {
        self.thresholds.iter().filter(|t| dot >= **t).count()
    }

    /// Score gap between adjacent grades.
    fn grade_gap(&self) -> f64 {
        if self.grade_scores.len() < 2 {
            1.0
        } else {
            self.grade_scores[1] - self.grade_scores[0]
        }
    }

    fn oracle(&self) -> Option<Vec<f64>> {
        if !self.snap {
            return None;
        }
        let a = self.grade_gap();
        Some(self.w_true.iter().map(|x| x / a).collect())
    }

    /// Rotates `row` within the sphere of radius `r` so its dot product with
    /// `w_true` becomes exactly `target`.
    fn snap_row(&self, row: &[f64], target: f64, r: f64) -> Vec<f64> {
        let unit: Vec<f64> = self.w_true.iter().map(|x| x / self.w_norm).collect();
        let proj: f64 = row.iter().zip(&unit).map(|(a, b)| a * b).sum();
        let mut perp: Vec<f64> = row.iter().zip(&unit).map(|(x, u)| x - proj * u).collect();
        let mut perp_norm = perp.iter().map(|x| x * x).sum::<f64>().sqrt();
        if perp_norm < 1e-9 * r {
            // row was (anti)parallel to w_true: take any orthogonal direction
            let axis = unit
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
                .map(|(i, _)| i)
                .unwrap_or(0);
            perp = vec![0.0; row.len()];
            perp[axis] = 1.0;
            let along: f64 = perp.iter().zip(&unit).map(|(a, b)| a * b).sum();
            for (p, u) in perp.iter_mut().zip(&unit) {
                *p -= along * u;
            }
            perp_norm = perp.iter().map(|x| x * x).sum::<f64>().sqrt();
            if perp_norm < 1e-12 {
                // d = 1: the sphere has two points; pick the signed one
                return self.w_true.iter().map(|x| r * (target.signum()) * x / self.w_norm).collect();
            }
        }
        let along_component = target / self.w_norm;
        let perp_component = (r * r - along_component * along_component).max(0.0).sqrt();
        unit.iter()
            .zip(&perp)
            .map(|(u, p)| along_component * u + perp_component * p / perp_norm)
            .collect()
    }
}

/// Generates a dataset together with its alignment metadata.
pub fn generate_with_meta(cfg: &SynthConfig) -> Result<(Dataset, SynthMeta)> {
    validate(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (alignment, y_max, flip_prob): (Option<Alignment>, u32, f64) = match &cfg.label_mode {
        LabelMode::Realizable { w_true, y_max } => {
            (Some(Alignment::build(cfg, w_true, *y_max, &mut rng)), *y_max, 0.0)
        }
        LabelMode::Noisy { w_true, y_max, flip_prob } => {
            (Some(Alignment::build(cfg, w_true, *y_max, &mut rng)), *y_max, *flip_prob)
        }
        LabelMode::Random { y_max } => (None, *y_max, 0.0),
    };

    let mut instances = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let mut rows = Vec::with_capacity(cfg.m);
        let mut labels = Vec::with_capacity(cfg.m);
        for _ in 0..cfg.m {
            let row = sample_row(cfg, &mut rng);
            match &alignment {
                Some(al) => {
                    let dot: f64 = row.iter().zip(&al.w_true).map(|(a, b)| a * b).sum();
                    let grade = al.grade_of(dot);
                    let row = if al.snap {
                        al.snap_row(&row, al.grade_scores[grade], cfg.input_radius)
                    } else {
                        row
                    };
                    rows.push(row);
                    labels.push(grade as f64);
                }
                None => {
                    rows.push(row);
                    labels.push(rng.gen_range(0..=y_max) as f64);
                }
            }
        }
        if flip_prob > 0.0 {
            for label in &mut labels {
                if rng.gen::<f64>() < flip_prob {
                    *label = rng.gen_range(0..=y_max) as f64;
                }
            }
        }
        instances.push(QueryInstance::from_rows(rows, labels)?);
    }
    let meta = match alignment {
        Some(al) => SynthMeta {
            thresholds: al.thresholds.clone(),
            grade_scores: al.grade_scores.clone(),
            oracle_weights: al.oracle(),
        },
        None => SynthMeta::default(),
    };
    Ok((Dataset::new(instances)?, meta))
}

/// Generates a dataset. Deterministic in the seed.
pub fn generate(cfg: &SynthConfig) -> Result<Dataset> {
    generate_with_meta(cfg).map(|(ds, _)| ds)
}

/// Query-level shuffle-then-split. The two sides partition the input
/// exactly; either side coming out empty is an error.
pub fn split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = dataset.len();
    if n < 2 {
        return Err(Error::InvalidParam("need at least 2 instances to split".into()));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParam(format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let k = (train_fraction * n as f64).round() as usize;
    if k == 0 || k >= n {
        return Err(Error::InvalidParam(format!(
            "split of {n} instances at fraction {train_fraction} leaves one side empty"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let train: Vec<QueryInstance> = order[..k].iter().map(|&i| dataset.instance(i).clone()).collect();
    let test: Vec<QueryInstance> = order[k..].iter().map(|&i| dataset.instance(i).clone()).collect();
    Ok((Dataset::new(train)?, Dataset::new(test)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{input_radius, NormKind};
    use crate::loss::SurrogateLoss;
    use crate::train::dataset_loss;
    use std::collections::HashMap;

    fn base_cfg() -> SynthConfig {
        SynthConfig {
            m: 6,
            d: 4,
            n: 12,
            input_radius: 1.0,
            row_norm: RowNorm::L2,
            label_mode: LabelMode::Realizable {
                w_true: vec![0.5, -0.5, 0.5, 0.5],
                y_max: 2,
            },
            seed: 99,
        }
    }

    #[test]
    fn rows_sit_exactly_on_the_sphere() {
        let cfg = base_cfg();
        let ds = generate(&cfg).unwrap();
        for inst in ds.iter() {
            for row in inst.rows() {
                let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() <= 1e-12, "row norm {norm}");
            }
        }
        assert!(input_radius(&ds, NormKind::L2) <= cfg.input_radius * (1.0 + 1e-12));
    }

    #[test]
    fn cube_rows_sit_on_the_surface() {
        let mut cfg = base_cfg();
        cfg.row_norm = RowNorm::Linf;
        cfg.label_mode = LabelMode::Random { y_max: 2 };
        let ds = generate(&cfg).unwrap();
        for inst in ds.iter() {
            for row in inst.rows() {
                let norm = row.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
                assert!((norm - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = base_cfg();
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
    }

    #[test]
    fn oracle_scores_grades_exactly() {
        let cfg = base_cfg();
        let (ds, meta) = generate_with_meta(&cfg).unwrap();
        let oracle = meta.oracle_weights.unwrap();
        for inst in ds.iter() {
            let scores: Vec<f64> = inst
                .rows()
                .map(|row| row.iter().zip(&oracle).map(|(a, b)| a * b).sum())
                .collect();
            // score_j - y_j is the same constant for every document
            let offset = scores[0] - inst.labels()[0];
            for (s, y) in scores.iter().zip(inst.labels()) {
                assert!((s - y - offset).abs() <= 1e-9, "misaligned: {s} vs {y}");
            }
        }
    }

    #[test]
    fn oracle_achieves_zero_ranksvm_and_zero_listnet_floor() {
        let cfg = base_cfg();
        let (ds, meta) = generate_with_meta(&cfg).unwrap();
        let oracle = meta.oracle_weights.unwrap();
        let hinge = dataset_loss(&SurrogateLoss::RankSvm, &ds, &oracle);
        assert!(hinge <= 1e-9, "ranksvm loss at oracle: {hinge}");

        let listnet = dataset_loss(&SurrogateLoss::ListNet, &ds, &oracle);
        let floor: f64 = ds
            .iter()
            .map(|i| SurrogateLoss::ListNet.min_value(i.labels()).unwrap())
            .sum::<f64>()
            / ds.len() as f64;
        assert!((listnet - floor).abs() <= 1e-9, "excess over floor: {}", listnet - floor);
    }

    #[test]
    fn noisy_mode_breaks_alignment() {
        let mut cfg = base_cfg();
        cfg.n = 60;
        cfg.label_mode = LabelMode::Noisy {
            w_true: vec![0.5, -0.5, 0.5, 0.5],
            y_max: 2,
            flip_prob: 0.4,
        };
        let (ds, meta) = generate_with_meta(&cfg).unwrap();
        let oracle = meta.oracle_weights.unwrap();
        let listnet = dataset_loss(&SurrogateLoss::ListNet, &ds, &oracle);
        let floor: f64 = ds
            .iter()
            .map(|i| SurrogateLoss::ListNet.min_value(i.labels()).unwrap())
            .sum::<f64>()
            / ds.len() as f64;
        assert!(listnet - floor > 1e-3, "flips should cost something: {}", listnet - floor);
    }

    #[test]
    fn split_sizes_and_determinism() {
        let cfg = SynthConfig {
            n: 10,
            label_mode: LabelMode::Random { y_max: 2 },
            ..base_cfg()
        };
        let ds = generate(&cfg).unwrap();
        let (train, test) = split(&ds, 0.8, 7).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(test.len(), 2);
        let (train2, test2) = split(&ds, 0.8, 7).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);
    }

    #[test]
    fn split_is_an_exact_partition() {
        let cfg = SynthConfig {
            n: 9,
            label_mode: LabelMode::Random { y_max: 1 },
            ..base_cfg()
        };
        let ds = generate(&cfg).unwrap();
        let (train, test) = split(&ds, 0.5, 3).unwrap();
        let key = |inst: &QueryInstance| -> Vec<u64> {
            inst.rows()
                .flatten()
                .map(|f| f.to_bits())
                .chain(inst.labels().iter().map(|f| f.to_bits()))
                .collect()
        };
        let mut counts: HashMap<Vec<u64>, i64> = HashMap::new();
        for inst in ds.iter() {
            *counts.entry(key(inst)).or_default() += 1;
        }
        for inst in train.iter().chain(test.iter()) {
            *counts.entry(key(inst)).or_default() -= 1;
        }
        assert!(counts.values().all(|&c| c == 0), "not a partition");
    }

    #[test]
    fn split_rejects_degenerate_fractions() {
        let cfg = SynthConfig {
            n: 10,
            label_mode: LabelMode::Random { y_max: 1 },
            ..base_cfg()
        };
        let ds = generate(&cfg).unwrap();
        assert!(split(&ds, 0.0, 1).is_err());
        assert!(split(&ds, 1.0, 1).is_err());
        assert!(split(&ds, 0.01, 1).is_err()); // rounds to an empty train side
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = base_cfg();
        cfg.label_mode = LabelMode::Noisy {
            w_true: vec![1.0; 4],
            y_max: 2,
            flip_prob: 1.5,
        };
        assert!(generate(&cfg).is_err());
        let mut cfg = base_cfg();
        cfg.label_mode = LabelMode::Realizable { w_true: vec![1.0; 3], y_max: 2 };
        assert!(generate(&cfg).is_err());
    }
}
