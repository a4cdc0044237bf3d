//! Independent numerical oracles: finite differences, empirical Lipschitz
//! estimation, exact small-scale inf-to-1 operator norms, the dual-norm
//! identity check, smoothness inequalities, and Monte-Carlo empirical
//! Rademacher complexity.
//!
//! Everything here deliberately avoids the closed forms it is used to check.

use crate::data::{ClassSpec, Dataset, QueryInstance};
use crate::error::{Error, Result};
use crate::loss::{LossFn, SurrogateLoss};
use crate::project::{ball_norm, norm_l1, norm_linf, project_ball};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// How random (s, y) points are drawn: scores uniform in
/// `[-score_scale, score_scale]`, labels integer grades uniform in
/// `{0, ..., label_range}`.
#[derive(Debug, Clone, Copy)]
pub struct SamplerSpec {
    pub m: usize,
    pub score_scale: f64,
    pub label_range: u32,
    pub trials: usize,
    pub seed: u64,
}

impl SamplerSpec {
    pub fn sample<R: Rng>(&self, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let s: Vec<f64> = (0..self.m)
            .map(|_| rng.gen_range(-self.score_scale..self.score_scale))
            .collect();
        let y: Vec<f64> = (0..self.m)
            .map(|_| rng.gen_range(0..=self.label_range) as f64)
            .collect();
        (s, y)
    }
}

/// Central finite differences of a scalar function of the score vector, with
/// per-coordinate step `h * (1 + |s_j|)`.
pub fn finite_diff_gradient_of<F: Fn(&[f64]) -> f64>(f: F, s: &[f64], h: f64) -> Vec<f64> {
    assert!(h > 0.0, "step must be positive");
    let mut g = vec![0.0; s.len()];
    let mut probe = s.to_vec();
    for j in 0..s.len() {
        let hj = h * (1.0 + s[j].abs());
        probe[j] = s[j] + hj;
        let up = f(&probe);
        probe[j] = s[j] - hj;
        let down = f(&probe);
        probe[j] = s[j];
        g[j] = (up - down) / (2.0 * hj);
    }
    g
}

/// Finite-difference gradient of a surrogate loss at `(s, y)`.
pub fn finite_diff_gradient(
    loss: &SurrogateLoss,
    s: &[f64],
    y: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    loss.value(s, y)?;
    Ok(finite_diff_gradient_of(|p| loss.loss(p, y), s, h))
}

/// True when every pair margin of the RankSVM hinge is at least `tol` away
/// from its kink, so the subgradient coincides with the derivative.
pub fn ranksvm_off_kink(s: &[f64], y: &[f64], tol: f64) -> bool {
    let m = s.len();
    for i in 0..m {
        for j in 0..m {
            if y[i] > y[j] && (1.0 + s[j] - s[i]).abs() <= tol {
                return false;
            }
        }
    }
    true
}

/// Result of an empirical Lipschitz sweep.
#[derive(Debug, Clone)]
pub struct LipschitzEstimate {
    /// Largest observed l1 gradient norm.
    pub sup: f64,
    pub arg_scores: Vec<f64>,
    pub arg_labels: Vec<f64>,
}

/// Supremum of the l1 gradient norm over random (s, y) draws. The dual of
/// l-infinity is l1, so this estimates the Lipschitz constant the analytic
/// side claims.
pub fn empirical_lipschitz_inf(loss: &SurrogateLoss, sampler: &SamplerSpec) -> LipschitzEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    let mut best = LipschitzEstimate { sup: -1.0, arg_scores: vec![], arg_labels: vec![] };
    for _ in 0..sampler.trials {
        let (s, y) = sampler.sample(&mut rng);
        let g = loss.grad(&s, &y);
        let l1 = norm_l1(&g);
        if l1 > best.sup {
            best = LipschitzEstimate { sup: l1, arg_scores: s, arg_labels: y };
        }
    }
    best
}

/// Exact and upper-bound values for the inf-to-1 operator norm
/// `max_{v in {-1,+1}^m} ||Mv||_1`.
#[derive(Debug, Clone, Copy)]
pub struct OpNormInfTo1 {
    /// Exact value by sign-vector enumeration; `None` when `m > 12`.
    pub exact: Option<f64>,
    /// Entry-absolute-sum upper bound, always available.
    pub abs_sum_bound: f64,
}

/// Inf-to-1 operator norm of a square matrix. The maximum of the convex map
/// `v -> ||Mv||_1` over the cube is attained at a vertex, so enumerating all
/// `2^m` sign vectors is exact; the budget is capped at `m <= 12`.
pub fn op_norm_inf_to_1(matrix: &[Vec<f64>]) -> Result<OpNormInfTo1> {
    let m = matrix.len();
    if m == 0 {
        return Err(Error::Empty("matrix must be nonempty".into()));
    }
    for row in matrix {
        if row.len() != m {
            return Err(Error::ShapeMismatch("matrix must be square".into()));
        }
    }
    let abs_sum_bound: f64 = matrix.iter().flatten().map(|x| x.abs()).sum();
    if m > 12 {
        return Ok(OpNormInfTo1 { exact: None, abs_sum_bound });
    }
    let mut best = 0.0_f64;
    for mask in 0u32..(1 << m) {
        let mut norm = 0.0;
        for row in matrix {
            let mut acc = 0.0;
            for (k, x) in row.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    acc += x;
                } else {
                    acc -= x;
                }
            }
            norm += acc.abs();
        }
        best = best.max(norm);
    }
    Ok(OpNormInfTo1 { exact: Some(best), abs_sum_bound })
}

/// Outcome of the dual-norm identity check
/// `||X'||_{1->p} = ||X||_{q->inf} = max_j ||X_j||_p`.
#[derive(Debug, Clone, Copy)]
pub struct Lemma1Report {
    pub closed_form: f64,
    pub basis_sup: f64,
    pub sampled_sup: f64,
    pub holds: bool,
}

fn vec_p_norm(v: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        norm_linf(v)
    } else if (p - 1.0).abs() < 1e-15 {
        norm_l1(v)
    } else {
        v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Checks the closed form `max_j ||X_j||_p` against the definition of
/// `||X'||_{1->p}`: the sup over the l1 sphere must be attained at a basis
/// vector and never exceeded by random samples.
pub fn verify_lemma1(rows: &[Vec<f64>], p: f64, samples: usize, seed: u64) -> Result<Lemma1Report> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::Empty("matrix must be nonempty".into()));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::ShapeMismatch("ragged matrix".into()));
    }
    if p < 1.0 {
        return Err(Error::InvalidParam(format!("p must be >= 1, got {p}")));
    }
    let m = rows.len();
    let closed_form = rows.iter().map(|r| vec_p_norm(r, p)).fold(0.0_f64, f64::max);

    // X'v for v in R^m is a combination of rows.
    let xt_apply = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; d];
        for (vi, row) in v.iter().zip(rows) {
            for (o, x) in out.iter_mut().zip(row) {
                *o += vi * x;
            }
        }
        out
    };

    let mut basis_sup = 0.0_f64;
    let mut v = vec![0.0; m];
    for j in 0..m {
        for sign in [1.0, -1.0] {
            v[j] = sign;
            basis_sup = basis_sup.max(vec_p_norm(&xt_apply(&v), p));
            v[j] = 0.0;
        }
    }

    // Uniform draws from the l1 sphere: exponential magnitudes normalized,
    // with random signs.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampled_sup = 0.0_f64;
    for _ in 0..samples {
        let mut mags: Vec<f64> = (0..m)
            .map(|_| -(1.0 - rng.gen::<f64>()).ln())
            .collect();
        let total: f64 = mags.iter().sum();
        for x in &mut mags {
            *x /= total;
            if rng.gen::<bool>() {
                *x = -*x;
            }
        }
        sampled_sup = sampled_sup.max(vec_p_norm(&xt_apply(&mags), p));
    }

    let tol = 1e-12 * (1.0 + closed_form);
    let holds = (basis_sup - closed_form).abs() <= tol && sampled_sup <= closed_form + tol;
    Ok(Lemma1Report { closed_form, basis_sup, sampled_sup, holds })
}

/// A two-sided inequality evaluation.
#[derive(Debug, Clone, Copy)]
pub struct IneqCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl IneqCheck {
    fn with_slack(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, pass: lhs <= rhs * (1.0 + 1e-9) }
    }
}

/// Self-bounding property of smooth nonnegative losses composed with a
/// linear scorer: `||grad_w f(w)||_2 <= sqrt(4 H f(w))` with
/// `H = H_phi * R_X^2`.
pub fn self_bounding_check(
    loss: &SurrogateLoss,
    spec: &ClassSpec,
    instance: &QueryInstance,
    w: &[f64],
) -> Result<IneqCheck> {
    let h_phi = loss
        .smoothness_inf()
        .ok_or_else(|| Error::Unsupported(format!("{} has no smoothness constant", loss.name())))?;
    if w.len() != instance.dim() {
        return Err(Error::ShapeMismatch("weight/feature dimension mismatch".into()));
    }
    let s: Vec<f64> = instance
        .rows()
        .map(|row| row.iter().zip(w).map(|(a, b)| a * b).sum())
        .collect();
    let f = loss.value(&s, instance.labels())?;
    let gs = loss.grad(&s, instance.labels());
    let mut gw = vec![0.0; w.len()];
    for (gj, row) in gs.iter().zip(instance.rows()) {
        for (o, x) in gw.iter_mut().zip(row) {
            *o += gj * x;
        }
    }
    let lhs = gw.iter().map(|x| x * x).sum::<f64>().sqrt();
    let h_w = h_phi * spec.input_radius * spec.input_radius;
    Ok(IneqCheck::with_slack(lhs, (4.0 * h_w * f).sqrt()))
}

/// Smoothness implies `(phi(s1) - phi(s2))^2 <= 6 H (phi(s1) + phi(s2))
/// ||s1 - s2||_inf^2` for nonnegative losses.
pub fn vector_smoothness_check(
    loss: &SurrogateLoss,
    s1: &[f64],
    s2: &[f64],
    y: &[f64],
) -> Result<IneqCheck> {
    let h_phi = loss
        .smoothness_inf()
        .ok_or_else(|| Error::Unsupported(format!("{} has no smoothness constant", loss.name())))?;
    let a = loss.value(s1, y)?;
    let b = loss.value(s2, y)?;
    if s1.len() != s2.len() {
        return Err(Error::ShapeMismatch("score vectors differ in length".into()));
    }
    let diff_inf = s1
        .iter()
        .zip(s2)
        .fold(0.0_f64, |acc, (x, z)| acc.max((x - z).abs()));
    let lhs = (a - b) * (a - b);
    let rhs = 6.0 * h_phi * (a + b) * diff_inf * diff_inf;
    Ok(IneqCheck::with_slack(lhs, rhs))
}

/// Inner optimizer used for the sup over the weight ball inside the
/// Rademacher estimate. The sup is non-concave in `w`; only the grid mode
/// (d <= 3, pitch W/200) is treated as exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerOpt {
    Grid,
    Multistart,
}

/// Monte-Carlo estimate of the empirical Rademacher complexity.
#[derive(Debug, Clone, Copy)]
pub struct RademacherEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
    pub inner_opt: InnerOpt,
}

/// Precomputed per-instance losses over a feasible grid of weight vectors,
/// so each sign draw reduces to a max over grid points.
struct GridLosses {
    /// per_point[g][i] = loss of instance i at grid point g.
    per_point: Vec<Vec<f64>>,
}

fn build_grid(spec: &ClassSpec, d: usize) -> Result<Vec<Vec<f64>>> {
    if d > 3 {
        return Err(Error::InvalidParam(format!(
            "grid inner optimization supports d <= 3, got {d}"
        )));
    }
    let w = spec.weight_radius;
    let steps_half = 200i64;
    let pitch = w / steps_half as f64;
    let axis: Vec<f64> = (-steps_half..=steps_half).map(|i| i as f64 * pitch).collect();
    let mut points = Vec::new();
    let mut point = vec![0.0; d];
    fn recur(
        axis: &[f64],
        d: usize,
        k: usize,
        point: &mut Vec<f64>,
        spec: &ClassSpec,
        out: &mut Vec<Vec<f64>>,
    ) {
        if k == d {
            if ball_norm(spec.norm_kind, point) <= spec.weight_radius * (1.0 + 1e-12) {
                out.push(point.clone());
            }
            return;
        }
        for &x in axis {
            point[k] = x;
            recur(axis, d, k + 1, point, spec, out);
        }
    }
    recur(&axis, d, 0, &mut point, spec, &mut points);
    Ok(points)
}

fn grid_losses<L: LossFn>(loss: &L, dataset: &Dataset, points: &[Vec<f64>]) -> GridLosses {
    let per_point = points
        .iter()
        .map(|w| {
            dataset
                .iter()
                .map(|inst| {
                    let s: Vec<f64> = inst
                        .rows()
                        .map(|row| row.iter().zip(w).map(|(a, b)| a * b).sum())
                        .collect();
                    loss.loss(&s, inst.labels())
                })
                .collect()
        })
        .collect();
    GridLosses { per_point }
}

fn grid_sup(grid: &GridLosses, signs: &[f64]) -> f64 {
    let n = signs.len() as f64;
    grid.per_point
        .iter()
        .map(|losses| losses.iter().zip(signs).map(|(l, s)| l * s).sum::<f64>() / n)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn multistart_sup<L: LossFn>(
    loss: &L,
    dataset: &Dataset,
    spec: &ClassSpec,
    signs: &[f64],
    rng: &mut ChaCha8Rng,
) -> f64 {
    let d = dataset.dim();
    let n = dataset.len() as f64;
    let objective = |w: &[f64]| -> f64 {
        dataset
            .iter()
            .zip(signs)
            .map(|(inst, sg)| {
                let s: Vec<f64> = inst
                    .rows()
                    .map(|row| row.iter().zip(w).map(|(a, b)| a * b).sum())
                    .collect();
                sg * loss.loss(&s, inst.labels())
            })
            .sum::<f64>()
            / n
    };
    let mut best = f64::NEG_INFINITY;
    for restart in 0..20 {
        let mut w: Vec<f64> = if restart == 0 {
            vec![0.0; d]
        } else {
            let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            project_ball(spec.norm_kind, &raw, spec.weight_radius)
        };
        for t in 1..=200usize {
            let mut grad = vec![0.0; d];
            for (inst, sg) in dataset.iter().zip(signs) {
                let s: Vec<f64> = inst
                    .rows()
                    .map(|row| row.iter().zip(&w).map(|(a, b)| a * b).sum())
                    .collect();
                let gs = loss.grad(&s, inst.labels());
                for (gj, row) in gs.iter().zip(inst.rows()) {
                    for (o, x) in grad.iter_mut().zip(row) {
                        *o += sg * gj * x / n;
                    }
                }
            }
            let eta = 0.5 * spec.weight_radius / (t as f64).sqrt();
            let stepped: Vec<f64> = w.iter().zip(&grad).map(|(wi, gi)| wi + eta * gi).collect();
            w = project_ball(spec.norm_kind, &stepped, spec.weight_radius);
        }
        best = best.max(objective(&w));
    }
    best
}

fn rademacher_signs<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect()
}

/// Monte-Carlo empirical Rademacher complexity of the loss class over the
/// weight ball: for each trial draw signs, solve the inner sup, and average.
pub fn monte_carlo_rademacher<L: LossFn>(
    loss: &L,
    spec: &ClassSpec,
    dataset: &Dataset,
    trials: usize,
    inner_opt: InnerOpt,
    seed: u64,
) -> Result<RademacherEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParam("trials must be >= 1".into()));
    }
    let n = dataset.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = match inner_opt {
        InnerOpt::Grid => {
            let points = build_grid(spec, dataset.dim())?;
            Some(grid_losses(loss, dataset, &points))
        }
        InnerOpt::Multistart => None,
    };
    let mut sups = Vec::with_capacity(trials);
    for _ in 0..trials {
        let signs = rademacher_signs(n, &mut rng);
        let sup = match &grid {
            Some(g) => grid_sup(g, &signs),
            None => multistart_sup(loss, dataset, spec, &signs, &mut rng),
        };
        sups.push(sup);
    }
    let mean = sups.iter().sum::<f64>() / trials as f64;
    let var = sups.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
        / (trials.max(2) - 1) as f64;
    Ok(RademacherEstimate {
        mean,
        std_error: (var / trials as f64).sqrt(),
        trials,
        inner_opt,
    })
}

/// Exact empirical Rademacher complexity by full enumeration of all `2^n`
/// sign vectors; `n <= 12`.
pub fn exhaustive_rademacher<L: LossFn>(
    loss: &L,
    spec: &ClassSpec,
    dataset: &Dataset,
) -> Result<f64> {
    let n = dataset.len();
    if n > 12 {
        return Err(Error::InvalidParam(format!(
            "exhaustive enumeration is capped at n <= 12, got {n}"
        )));
    }
    let points = build_grid(spec, dataset.dim())?;
    let grid = grid_losses(loss, dataset, &points);
    let mut total = 0.0;
    let count = 1u32 << n;
    let mut signs = vec![0.0; n];
    for mask in 0..count {
        for (i, s) in signs.iter_mut().enumerate() {
            *s = if mask & (1 << i) != 0 { 1.0 } else { -1.0 };
        }
        total += grid_sup(&grid, &signs);
    }
    Ok(total / count as f64)
}
