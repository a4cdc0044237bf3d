//! Training procedures over linear scorers: online gradient descent with
//! online-to-batch averaging, regularized ERM with the closed-form lambda,
//! and plain projected-subgradient ERM.
//!
//! All three keep their iterates inside the configured weight ball and are
//! bitwise deterministic given (config, dataset).

use crate::data::{ClassSpec, Dataset, QueryInstance};
use crate::error::{Error, Result};
use crate::loss::{LossFn, SurrogateLoss};
use crate::project::{ball_norm, project_ball, project_l2};
use crate::scoring::ScoringParams;

/// Step-size policy.
///
/// `OgdTheorem2` sets `eta = W / (G_w sqrt(2n))` with `G_w = G_phi R_X`, the
/// minimizer of the regret envelope `W^2/(2 eta) + eta G_w^2 n`. `SmoothEta`
/// uses the smooth-loss formula with a caller-supplied estimate of the
/// optimal loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy {
    OgdFixed { eta: f64 },
    OgdTheorem2,
    SmoothEta { l_star_estimate: f64 },
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub spec: ClassSpec,
    pub loss: SurrogateLoss,
    pub policy: StepPolicy,
    /// ERM: passes over the data (total steps = epochs * n).
    /// RERM: iteration cap for the inner solver.
    pub epochs: usize,
    /// RERM regularization; `None` selects the closed-form default.
    pub lambda: Option<f64>,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(spec: ClassSpec, loss: SurrogateLoss) -> Self {
        Self { spec, loss, policy: StepPolicy::OgdTheorem2, epochs: 1000, lambda: None, seed: 0 }
    }
}

/// A fitted linear scorer plus training diagnostics.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub weights: ScoringParams,
    pub train_loss: f64,
    /// Per-step losses (OGD: the online losses f_i(w_i); ERM/RERM: the
    /// objective trace).
    pub iterate_trace: Option<Vec<f64>>,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// Loss and w-gradient of one instance at `w` (chain rule through `s = Xw`).
pub fn instance_loss_grad<L: LossFn>(
    loss: &L,
    instance: &QueryInstance,
    w: &[f64],
) -> (f64, Vec<f64>) {
    let s: Vec<f64> = instance
        .rows()
        .map(|row| row.iter().zip(w).map(|(a, b)| a * b).sum())
        .collect();
    let value = loss.loss(&s, instance.labels());
    let gs = loss.grad(&s, instance.labels());
    let mut gw = vec![0.0; w.len()];
    for (gj, row) in gs.iter().zip(instance.rows()) {
        for (acc, x) in gw.iter_mut().zip(row) {
            *acc += gj * x;
        }
    }
    (value, gw)
}

/// Mean loss over a dataset.
pub fn dataset_loss<L: LossFn>(loss: &L, dataset: &Dataset, w: &[f64]) -> f64 {
    let n = dataset.len() as f64;
    dataset
        .iter()
        .map(|inst| {
            let s: Vec<f64> = inst
                .rows()
                .map(|row| row.iter().zip(w).map(|(a, b)| a * b).sum())
                .collect();
            loss.loss(&s, inst.labels())
        })
        .sum::<f64>()
        / n
}

/// Mean loss and mean w-gradient over a dataset.
pub fn dataset_loss_grad<L: LossFn>(loss: &L, dataset: &Dataset, w: &[f64]) -> (f64, Vec<f64>) {
    let n = dataset.len() as f64;
    let mut total = 0.0;
    let mut grad = vec![0.0; w.len()];
    for inst in dataset.iter() {
        let (v, g) = instance_loss_grad(loss, inst, w);
        total += v;
        for (acc, x) in grad.iter_mut().zip(&g) {
            *acc += x;
        }
    }
    for x in &mut grad {
        *x /= n;
    }
    (total / n, grad)
}

/// The w-space Lipschitz constant `G_phi(m_max) * R_X` a dataset induces.
pub fn w_space_lipschitz(loss: &SurrogateLoss, spec: &ClassSpec, dataset: &Dataset) -> f64 {
    let m_max = dataset.iter().map(|i| i.num_docs()).max().unwrap_or(1);
    loss.constants(spec, m_max).lipschitz_inf * spec.input_radius
}

/// `W / (G_w sqrt(2n))`: the step that reproduces the sqrt(2) constant in
/// the OGD excess-risk bound.
pub fn theorem2_eta(g_w: f64, w2: f64, n: usize) -> f64 {
    w2 / (g_w * (2.0 * n as f64).sqrt())
}

/// Closed-form regularization weight
/// `lambda = sqrt( (4 G^2 / n) / (W^2/2 + 4 W^2/n) )`, with `G` the w-space
/// Lipschitz constant.
pub fn lambda_default(g_w: f64, w2: f64, n: usize) -> f64 {
    let nf = n as f64;
    ((4.0 * g_w * g_w / nf) / (w2 * w2 / 2.0 + 4.0 * w2 * w2 / nf)).sqrt()
}

/// Smooth-loss step size
/// `eta = W / (4 H W + 2 sqrt(4 H^2 W^2 + 2 H L* n))`, with `H` the w-space
/// smoothness constant `H_phi R_X^2`.
pub fn eta_smooth(w2: f64, h_w: f64, l_star: f64, n: usize) -> f64 {
    assert!(h_w > 0.0, "smoothness constant must be positive");
    assert!(l_star >= 0.0, "optimal loss estimate must be nonnegative");
    let nf = n as f64;
    w2 / (4.0 * h_w * w2 + 2.0 * (4.0 * h_w * h_w * w2 * w2 + 2.0 * h_w * l_star * nf).sqrt())
}

fn resolve_eta(cfg: &TrainConfig, dataset: &Dataset) -> Result<f64> {
    match cfg.policy {
        StepPolicy::OgdFixed { eta } => {
            if eta < 0.0 || !eta.is_finite() {
                return Err(Error::InvalidParam(format!("eta must be >= 0, got {eta}")));
            }
            Ok(eta)
        }
        StepPolicy::OgdTheorem2 => {
            let g_w = w_space_lipschitz(&cfg.loss, &cfg.spec, dataset);
            if g_w <= 0.0 {
                return Err(Error::InvalidParam("zero Lipschitz constant".into()));
            }
            Ok(theorem2_eta(g_w, cfg.spec.weight_radius, dataset.len()))
        }
        StepPolicy::SmoothEta { l_star_estimate } => {
            let h_phi = cfg.loss.smoothness_inf().ok_or_else(|| {
                Error::Unsupported(format!(
                    "{} has no smoothness constant for the smooth step policy",
                    cfg.loss.name()
                ))
            })?;
            let h_w = h_phi * cfg.spec.input_radius * cfg.spec.input_radius;
            Ok(eta_smooth(cfg.spec.weight_radius, h_w, l_star_estimate, dataset.len()))
        }
    }
}

/// Online gradient descent, single pass in dataset order, starting from
/// `w_1 = 0`, with each update projected back onto the weight ball. Returns
/// the average of all iterates (the online-to-batch conversion; the average
/// includes the post-update iterate, matching the hand-rolled single-step
/// oracle used in the tests).
pub fn ogd_train(dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainedModel> {
    let d = dataset.dim();
    let eta = resolve_eta(cfg, dataset)?;
    let mut warnings = Vec::new();
    if !cfg.loss.is_convex() {
        warnings.push(format!(
            "{} is non-convex: the online-to-batch guarantee is void; treat the result as a heuristic",
            cfg.loss.name()
        ));
    }
    let mut w = vec![0.0; d];
    let mut avg = vec![0.0; d];
    let mut count = 1.0;
    let mut trace = Vec::with_capacity(dataset.len());
    for inst in dataset.iter() {
        let (value, grad) = instance_loss_grad(&cfg.loss, inst, &w);
        trace.push(value);
        let stepped: Vec<f64> = w.iter().zip(&grad).map(|(wi, gi)| wi - eta * gi).collect();
        w = project_ball(cfg.spec.norm_kind, &stepped, cfg.spec.weight_radius);
        for (a, wi) in avg.iter_mut().zip(&w) {
            *a += wi;
        }
        count += 1.0;
    }
    let averaged: Vec<f64> = avg.iter().map(|a| a / count).collect();
    let train_loss = dataset_loss(&cfg.loss, dataset, &averaged);
    Ok(TrainedModel {
        weights: ScoringParams::new(averaged),
        train_loss,
        iterate_trace: Some(trace),
        converged: true,
        warnings,
    })
}

/// Result of the deterministic projected-gradient solver.
#[derive(Debug, Clone)]
pub struct SolveStats {
    pub iterations: usize,
    pub projected_gradient_norm: f64,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
}

/// Minimizes `lambda/2 ||w||_2^2 + (1/n) sum_i loss(X_i w, y_i)` over the
/// weight ball by projected full-gradient descent with halving line search,
/// starting from `init` (the origin when absent). Convergence certificate:
/// unit-step projected gradient norm below `tol`.
///
/// If the line search cannot make progress (subgradient kinks), a safeguard
/// step `W / (g_ref sqrt(k))` is taken instead so nonsmooth losses still
/// move.
pub fn rerm_minimize<L: LossFn>(
    loss: &L,
    dataset: &Dataset,
    spec: &ClassSpec,
    lambda: f64,
    max_iters: usize,
    tol: f64,
    g_ref: f64,
    init: Option<&[f64]>,
) -> (Vec<f64>, SolveStats) {
    let d = dataset.dim();
    let objective = |w: &[f64]| -> f64 {
        let data = dataset_loss(loss, dataset, w);
        0.5 * lambda * w.iter().map(|x| x * x).sum::<f64>() + data
    };
    let grad_of = |w: &[f64]| -> (f64, Vec<f64>) {
        let (data, mut g) = dataset_loss_grad(loss, dataset, w);
        let reg = 0.5 * lambda * w.iter().map(|x| x * x).sum::<f64>();
        for (gi, wi) in g.iter_mut().zip(w) {
            *gi += lambda * wi;
        }
        (data + reg, g)
    };

    let mut w = match init {
        Some(start) => project_ball(spec.norm_kind, start, spec.weight_radius),
        None => vec![0.0; d],
    };
    let (mut fw, mut grad) = grad_of(&w);
    let mut trace = vec![fw];
    let mut step = 1.0_f64;
    let mut pg_norm = f64::INFINITY;
    let mut iters = 0;
    let mut safeguard_count = 0usize;
    for k in 1..=max_iters {
        iters = k;
        // unit-step projected gradient: the optimality certificate
        let unit: Vec<f64> = w.iter().zip(&grad).map(|(wi, gi)| wi - gi).collect();
        let proj_unit = project_ball(spec.norm_kind, &unit, spec.weight_radius);
        pg_norm = w
            .iter()
            .zip(&proj_unit)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if pg_norm <= tol {
            break;
        }

        step = (step * 2.0).min(1e6);
        let mut accepted = false;
        while step > 1e-18 {
            let cand: Vec<f64> = w.iter().zip(&grad).map(|(wi, gi)| wi - step * gi).collect();
            let cand = project_ball(spec.norm_kind, &cand, spec.weight_radius);
            let moved: f64 = w.iter().zip(&cand).map(|(a, b)| (a - b) * (a - b)).sum();
            if moved == 0.0 {
                break;
            }
            let f_cand = objective(&cand);
            if f_cand <= fw - 1e-4 * moved / step {
                w = cand;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // kink: decaying safeguard step, no descent requirement
            safeguard_count += 1;
            let eta = spec.weight_radius / (g_ref.max(1e-12) * (safeguard_count as f64).sqrt());
            let cand: Vec<f64> = w.iter().zip(&grad).map(|(wi, gi)| wi - eta * gi).collect();
            w = project_ball(spec.norm_kind, &cand, spec.weight_radius);
            step = 1.0;
        }
        let (f_new, g_new) = grad_of(&w);
        fw = f_new;
        grad = g_new;
        trace.push(fw);
    }
    let converged = pg_norm <= tol;
    (w, SolveStats { iterations: iters, projected_gradient_norm: pg_norm, converged, objective_trace: trace })
}

/// Regularized empirical risk minimization with the closed-form default
/// `lambda` when none is supplied. Rejects non-convex losses.
pub fn rerm_train(dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainedModel> {
    if !cfg.loss.is_convex() {
        return Err(Error::Unsupported(format!(
            "{} is non-convex: regularized ERM guarantees do not apply",
            cfg.loss.name()
        )));
    }
    if let Some(l) = cfg.lambda {
        if l < 0.0 || !l.is_finite() {
            return Err(Error::InvalidParam(format!("lambda must be >= 0, got {l}")));
        }
    }
    let g_w = w_space_lipschitz(&cfg.loss, &cfg.spec, dataset);
    let lambda = cfg
        .lambda
        .unwrap_or_else(|| lambda_default(g_w, cfg.spec.weight_radius, dataset.len()));
    let (w, stats) =
        rerm_minimize(&cfg.loss, dataset, &cfg.spec, lambda, cfg.epochs.max(1), 1e-8, g_w, None);
    let train_loss = dataset_loss(&cfg.loss, dataset, &w);
    let mut warnings = Vec::new();
    if !stats.converged {
        warnings.push(format!(
            "projected gradient norm {:.3e} above tolerance after {} iterations",
            stats.projected_gradient_norm, stats.iterations
        ));
    }
    Ok(TrainedModel {
        weights: ScoringParams::new(w),
        train_loss,
        iterate_trace: Some(stats.objective_trace),
        converged: stats.converged,
        warnings,
    })
}

/// Plain ERM: projected subgradient descent on the empirical loss over the
/// ClassSpec ball (l2 or l1 projection per norm kind), `epochs * n` steps
/// with `eta_t = W / (G_w sqrt(t))`, returning the best iterate by training
/// loss.
pub fn erm_train(dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainedModel> {
    let d = dataset.dim();
    let mut warnings = Vec::new();
    if !cfg.loss.is_convex() {
        warnings.push(format!(
            "{} is non-convex: ERM guarantees do not apply",
            cfg.loss.name()
        ));
    }
    let g_w = w_space_lipschitz(&cfg.loss, &cfg.spec, dataset).max(1e-12);
    let total_steps = cfg.epochs.max(1) * dataset.len();
    let mut w = vec![0.0; d];
    let mut best_w = w.clone();
    let mut best_loss = f64::INFINITY;
    let mut trace = Vec::with_capacity(total_steps);
    for t in 1..=total_steps {
        let (value, grad) = dataset_loss_grad(&cfg.loss, dataset, &w);
        trace.push(value);
        if value < best_loss {
            best_loss = value;
            best_w = w.clone();
        }
        let eta = cfg.spec.weight_radius / (g_w * (t as f64).sqrt());
        let stepped: Vec<f64> = w.iter().zip(&grad).map(|(wi, gi)| wi - eta * gi).collect();
        w = project_ball(cfg.spec.norm_kind, &stepped, cfg.spec.weight_radius);
    }
    // the final iterate also competes
    let final_loss = dataset_loss(&cfg.loss, dataset, &w);
    if final_loss < best_loss {
        best_loss = final_loss;
        best_w = w;
    }
    Ok(TrainedModel {
        weights: ScoringParams::new(best_w),
        train_loss: best_loss,
        iterate_trace: Some(trace),
        converged: true,
        warnings,
    })
}

/// True when the model's weights lie inside the spec's ball with slack 1e-9.
pub fn feasible(model: &TrainedModel, spec: &ClassSpec) -> bool {
    ball_norm(spec.norm_kind, &model.weights.w) <= spec.weight_radius + 1e-9
}

/// Convenience projection used by callers that clamp external weight vectors.
pub fn clamp_to_l2_ball(w: &[f64], radius: f64) -> Vec<f64> {
    project_l2(w, radius)
}
