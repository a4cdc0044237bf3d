//! The two headline experiments: generalization gap as the document-list
//! length m grows, and excess-risk decay as the sample size n grows.
//!
//! Both emit one row per (sweep value, trial) plus a summary statistic: a
//! ratio of trial-mean gaps with a bootstrap confidence interval for the m
//! sweep, and a fitted log-log slope with a bootstrap confidence interval
//! for the n sweep. Everything is deterministic in the master seed; trials
//! run in parallel on per-trial RNG streams and are merged in sweep order.

use anyhow::{anyhow, bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rankbench_core::bounds::{BoundInputs, BoundReport};
use rankbench_core::metrics::ndcg_at_k;
use rankbench_core::synth::{generate_with_meta, LabelMode, RowNorm, SynthConfig, SynthMeta};
use rankbench_core::train::{
    dataset_loss, erm_train, ogd_train, rerm_minimize, rerm_train, w_space_lipschitz,
    StepPolicy, TrainConfig, TrainedModel,
};
use rankbench_core::{ClassSpec, Dataset, SurrogateLoss};

/// splitmix64-style mixing for derived seeds.
pub fn mix_seed(seed: u64, tag: u64, idx: u64) -> u64 {
    let mut z = seed
        .wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(idx.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainerKind {
    Rerm,
    Ogd,
    OgdSmooth,
    Erm,
}

impl std::str::FromStr for TrainerKind {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rerm" => Ok(Self::Rerm),
            "ogd" => Ok(Self::Ogd),
            "ogd-smooth" => Ok(Self::OgdSmooth),
            "erm" => Ok(Self::Erm),
            other => bail!("unknown trainer {other:?} (rerm | ogd | ogd-smooth | erm)"),
        }
    }
}

fn random_unit_vector(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..d)
            .map(|_| {
                let u1: f64 = 1.0 - rng.gen::<f64>();
                let u2: f64 = rng.gen();
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return raw.iter().map(|x| x / norm).collect();
        }
    }
}

/// Mean loss over a dataset with each instance's label-dependent floor
/// subtracted, so zero means per-instance optimality.
pub fn floor_adjusted_loss(loss: &SurrogateLoss, dataset: &Dataset, w: &[f64]) -> f64 {
    let n = dataset.len() as f64;
    dataset
        .iter()
        .map(|inst| {
            let s: Vec<f64> = inst
                .rows()
                .map(|row| row.iter().zip(w).map(|(a, b)| a * b).sum())
                .collect();
            let value = loss.value(&s, inst.labels()).expect("valid instance");
            value - loss.min_value(inst.labels()).expect("valid labels")
        })
        .sum::<f64>()
        / n
}

fn mean_ndcg_at_1(dataset: &Dataset, w: &[f64]) -> f64 {
    let n = dataset.len() as f64;
    dataset
        .iter()
        .map(|inst| {
            let s: Vec<f64> = inst
                .rows()
                .map(|row| row.iter().zip(w).map(|(a, b)| a * b).sum())
                .collect();
            ndcg_at_k(&s, inst.labels(), 1).expect("valid instance")
        })
        .sum::<f64>()
        / n
}

fn train_model(
    trainer: TrainerKind,
    loss: &SurrogateLoss,
    spec: &ClassSpec,
    train: &Dataset,
    epochs: usize,
    l_star_estimate: f64,
    seed: u64,
) -> Result<TrainedModel> {
    let mut cfg = TrainConfig::new(*spec, *loss);
    cfg.epochs = epochs;
    cfg.seed = seed;
    let model = match trainer {
        TrainerKind::Rerm => rerm_train(train, &cfg)?,
        TrainerKind::Ogd => {
            cfg.policy = StepPolicy::OgdTheorem2;
            ogd_train(train, &cfg)?
        }
        TrainerKind::OgdSmooth => {
            cfg.policy = StepPolicy::SmoothEta { l_star_estimate };
            ogd_train(train, &cfg)?
        }
        TrainerKind::Erm => erm_train(train, &cfg)?,
    };
    Ok(model)
}

/// Best comparator loss on the evaluation set: a scale sweep along the
/// generator's oracle direction, optionally polished by projected gradient
/// descent (skipped for the quadratic-cost pairwise loss), and never worse
/// than the trained model itself.
fn comparator_loss(
    loss: &SurrogateLoss,
    spec: &ClassSpec,
    eval: &Dataset,
    meta: &SynthMeta,
    trained: &[f64],
    polish_iters: usize,
) -> f64 {
    let mut best = dataset_loss(loss, eval, trained);
    let mut best_w = trained.to_vec();
    if let Some(oracle) = &meta.oracle_weights {
        let norm = oracle.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            let top = spec.weight_radius / norm;
            for k in 0..=40 {
                let c = top * k as f64 / 40.0;
                let cand: Vec<f64> = oracle.iter().map(|x| x * c).collect();
                let value = dataset_loss(loss, eval, &cand);
                if value < best {
                    best = value;
                    best_w = cand;
                }
            }
        }
    }
    if polish_iters > 0 && loss.is_convex() {
        let g_w = w_space_lipschitz(loss, spec, eval);
        let (w, _) =
            rerm_minimize(loss, eval, spec, 0.0, polish_iters, 1e-9, g_w, Some(&best_w));
        best = best.min(dataset_loss(loss, eval, &w));
    }
    best
}

// ---------------------------------------------------------------------------
// gap versus m
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GapConfig {
    pub loss: SurrogateLoss,
    pub trainer: TrainerKind,
    pub m_values: Vec<usize>,
    pub n: usize,
    pub d: usize,
    pub trials: usize,
    pub w2: f64,
    pub rx: f64,
    pub y_max: u32,
    pub flip_prob: f64,
    pub delta: f64,
    pub seed: u64,
    /// Iteration cap override; per-loss defaults otherwise.
    pub epochs: Option<usize>,
}

impl Default for GapConfig {
    fn default() -> Self {
        Self {
            loss: SurrogateLoss::ListNet,
            trainer: TrainerKind::Rerm,
            m_values: vec![5, 25, 125],
            n: 200,
            d: 10,
            trials: 20,
            w2: 8.0,
            rx: 1.0,
            y_max: 4,
            // pure label noise: the gap then isolates overfitting, which is
            // the quantity the uniform-convergence bounds control
            flip_prob: 1.0,
            delta: 0.05,
            seed: 20240801,
            epochs: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GapRow {
    pub m: usize,
    pub trial: usize,
    pub data_seed: u64,
    pub train_loss: f64,
    pub test_loss: f64,
    pub gap: f64,
    pub excess: f64,
    pub ndcg_at_1: f64,
    pub report: BoundReport,
}

#[derive(Debug, Clone)]
pub struct GapSummary {
    pub mean_gaps: Vec<(usize, f64)>,
    /// mean gap at the largest m over mean gap at the smallest m
    pub gap_ratio: f64,
    pub ratio_ci_lower: f64,
    pub ratio_ci_upper: f64,
    /// ratio of the baseline complexity term between the same two m values
    pub chapelle_ratio: f64,
    /// rows (RERM only) whose measured excess risk exceeds the RERM bound
    pub rerm_bound_violations: usize,
    pub max_excess_to_bound: f64,
}

fn default_epochs(trainer: TrainerKind, loss: &SurrogateLoss) -> usize {
    match (trainer, loss) {
        // the pairwise hinge costs O(m^2) per instance; a tighter cap keeps
        // the sweep inside its time budget and the comparison honest across m
        (TrainerKind::Rerm, SurrogateLoss::RankSvm) => 150,
        (TrainerKind::Rerm, _) => 2000,
        (TrainerKind::Erm, _) => 10,
        _ => 1,
    }
}

pub fn gap_vs_m(cfg: &GapConfig) -> Result<(Vec<GapRow>, GapSummary)> {
    if cfg.m_values.is_empty() {
        bail!("m sweep is empty");
    }
    if cfg.trials == 0 {
        bail!("need at least one trial");
    }
    let spec = ClassSpec::l2(cfg.w2, cfg.rx).map_err(|e| anyhow!(e))?;
    let epochs = cfg.epochs.unwrap_or_else(|| default_epochs(cfg.trainer, &cfg.loss));

    let jobs: Vec<(usize, usize)> = (0..cfg.m_values.len())
        .flat_map(|mi| (0..cfg.trials).map(move |t| (mi, t)))
        .collect();
    let mut rows: Vec<GapRow> = jobs
        .par_iter()
        .map(|&(m_idx, trial)| -> Result<GapRow> {
            let m = cfg.m_values[m_idx];
            let mut wrng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 1, trial as u64));
            let w_true = random_unit_vector(cfg.d, &mut wrng);
            let stream = ((m_idx as u64) << 32) | trial as u64;
            let train_seed = mix_seed(cfg.seed, 2, stream);
            let test_seed = mix_seed(cfg.seed, 3, stream);
            let label_mode = LabelMode::Noisy {
                w_true: w_true.clone(),
                y_max: cfg.y_max,
                flip_prob: cfg.flip_prob,
            };
            let synth = SynthConfig {
                m,
                d: cfg.d,
                n: cfg.n,
                input_radius: cfg.rx,
                row_norm: RowNorm::L2,
                label_mode: label_mode.clone(),
                seed: train_seed,
            };
            let (train, meta) = generate_with_meta(&synth).map_err(|e| anyhow!(e))?;
            let test_cfg =
                SynthConfig { n: 5 * cfg.n, seed: test_seed, label_mode, ..synth.clone() };
            let (test, _) = generate_with_meta(&test_cfg).map_err(|e| anyhow!(e))?;

            let model = train_model(
                cfg.trainer,
                &cfg.loss,
                &spec,
                &train,
                epochs,
                0.0,
                mix_seed(cfg.seed, 4, stream),
            )
            .map_err(|e| anyhow!(e))?;
            let w = &model.weights.w;
            let test_loss = dataset_loss(&cfg.loss, &test, w);
            let gap = test_loss - model.train_loss;
            anyhow::ensure!(gap.is_finite(), "non-finite gap");

            let polish = match cfg.loss {
                SurrogateLoss::RankSvm => 0,
                _ => 300,
            };
            let comp = comparator_loss(&cfg.loss, &spec, &test, &meta, w, polish);
            let excess = test_loss - comp;

            let constants = cfg.loss.constants(&spec, m);
            let report = BoundReport::compute(&BoundInputs {
                g_inf: constants.lipschitz_inf,
                g_l2: constants.lipschitz_l2,
                h_inf: constants.smoothness_inf,
                b: constants.uniform_bound,
                spec,
                m,
                n: cfg.n,
                d: cfg.d,
                delta: cfg.delta,
                l_star: None,
            });
            Ok(GapRow {
                m,
                trial,
                data_seed: train_seed,
                train_loss: model.train_loss,
                test_loss,
                gap,
                excess,
                ndcg_at_1: mean_ndcg_at_1(&test, w),
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| (r.m, r.trial));

    let summary = summarize_gap(cfg, &rows)?;
    Ok((rows, summary))
}

fn summarize_gap(cfg: &GapConfig, rows: &[GapRow]) -> Result<GapSummary> {
    let m_min = *cfg.m_values.iter().min().unwrap();
    let m_max = *cfg.m_values.iter().max().unwrap();
    let gaps_of = |m: usize| -> Vec<f64> {
        let mut g: Vec<(usize, f64)> = rows
            .iter()
            .filter(|r| r.m == m)
            .map(|r| (r.trial, r.gap))
            .collect();
        g.sort_by_key(|x| x.0);
        g.into_iter().map(|x| x.1).collect()
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;

    let mean_gaps: Vec<(usize, f64)> =
        cfg.m_values.iter().map(|&m| (m, mean(&gaps_of(m)))).collect();
    let small = gaps_of(m_min);
    let large = gaps_of(m_max);
    let gap_ratio = mean(&large) / mean(&small);

    // paired bootstrap over trials (the same trial index shares its true
    // model across m values)
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 9, 0));
    let mut ratios = Vec::with_capacity(2000);
    for _ in 0..2000 {
        let mut s = 0.0;
        let mut l = 0.0;
        for _ in 0..small.len() {
            let pick = rng.gen_range(0..small.len());
            s += small[pick];
            l += large[pick];
        }
        ratios.push(l / s);
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ratio_ci_lower = ratios[(ratios.len() as f64 * 0.05) as usize];
    let ratio_ci_upper = ratios[((ratios.len() as f64 * 0.95) as usize).min(ratios.len() - 1)];

    let complexity_of = |m: usize| -> Result<f64> {
        rows.iter()
            .find(|r| r.m == m)
            .and_then(|r| r.report.chapelle_complexity)
            .context("baseline complexity term missing")
    };
    let chapelle_ratio = complexity_of(m_max)? / complexity_of(m_min)?;

    let mut rerm_bound_violations = 0;
    let mut max_excess_to_bound = 0.0_f64;
    if cfg.trainer == TrainerKind::Rerm {
        for row in rows {
            let bound = row
                .report
                .rerm_theorem3
                .context("RERM bound missing from report")?;
            max_excess_to_bound = max_excess_to_bound.max(row.excess / bound);
            if row.excess > bound {
                rerm_bound_violations += 1;
            }
        }
    }
    Ok(GapSummary {
        mean_gaps,
        gap_ratio,
        ratio_ci_lower,
        ratio_ci_upper,
        chapelle_ratio,
        rerm_bound_violations,
        max_excess_to_bound,
    })
}

// ---------------------------------------------------------------------------
// excess risk versus n
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMode {
    Realizable,
    Noisy,
}

impl std::str::FromStr for RateMode {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "realizable" => Ok(Self::Realizable),
            "noisy" => Ok(Self::Noisy),
            other => bail!("unknown mode {other:?} (realizable | noisy)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RateConfig {
    pub mode: RateMode,
    pub loss: SurrogateLoss,
    pub trainer: TrainerKind,
    pub n_values: Vec<usize>,
    pub m: usize,
    pub d: usize,
    pub trials: usize,
    pub w2: f64,
    pub rx: f64,
    pub y_max: u32,
    pub flip_prob: f64,
    pub seed: u64,
    pub epochs: Option<usize>,
}

impl Default for RateConfig {
    fn default() -> Self {
        Self {
            mode: RateMode::Realizable,
            loss: SurrogateLoss::ListNet,
            trainer: TrainerKind::OgdSmooth,
            n_values: vec![100, 400, 1600, 6400],
            m: 8,
            d: 8,
            trials: 10,
            w2: 2.5,
            rx: 1.0,
            y_max: 2,
            flip_prob: 0.25,
            seed: 7,
            epochs: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RateRow {
    pub n: usize,
    pub trial: usize,
    pub data_seed: u64,
    /// floor-adjusted test loss of the trained model minus the comparator's
    pub excess: f64,
    pub train_loss_adjusted: f64,
    pub test_loss_adjusted: f64,
    /// held-out estimate fed into the second training phase
    pub l_star_estimate: f64,
    pub bound_rerm: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RateSummary {
    pub mean_excess: Vec<(usize, f64)>,
    pub slope: f64,
    pub slope_ci_lower: f64,
    pub slope_ci_upper: f64,
}

pub fn rate_vs_n(cfg: &RateConfig) -> Result<(Vec<RateRow>, RateSummary)> {
    if cfg.n_values.len() < 3 {
        bail!("need at least 3 sample sizes to fit a slope");
    }
    if cfg.trials == 0 {
        bail!("need at least one trial");
    }
    if !cfg.loss.is_smooth() {
        bail!("the rate experiment needs a smooth loss");
    }
    let spec = ClassSpec::l2(cfg.w2, cfg.rx).map_err(|e| anyhow!(e))?;

    let jobs: Vec<(usize, usize)> = (0..cfg.n_values.len())
        .flat_map(|ni| (0..cfg.trials).map(move |t| (ni, t)))
        .collect();
    let mut rows: Vec<RateRow> = jobs
        .par_iter()
        .map(|&(n_idx, trial)| -> Result<RateRow> {
            let n = cfg.n_values[n_idx];
            let mut wrng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 11, trial as u64));
            let w_true = random_unit_vector(cfg.d, &mut wrng);
            let stream = ((n_idx as u64) << 32) | trial as u64;
            let label_mode = match cfg.mode {
                RateMode::Realizable => {
                    LabelMode::Realizable { w_true: w_true.clone(), y_max: cfg.y_max }
                }
                RateMode::Noisy => LabelMode::Noisy {
                    w_true: w_true.clone(),
                    y_max: cfg.y_max,
                    flip_prob: cfg.flip_prob,
                },
            };
            let base = SynthConfig {
                m: cfg.m,
                d: cfg.d,
                n,
                input_radius: cfg.rx,
                row_norm: RowNorm::L2,
                label_mode,
                seed: mix_seed(cfg.seed, 12, stream),
            };
            let (train, _) = generate_with_meta(&base).map_err(|e| anyhow!(e))?;
            let val_cfg =
                SynthConfig { seed: mix_seed(cfg.seed, 13, stream), ..base.clone() };
            let (val, _) = generate_with_meta(&val_cfg).map_err(|e| anyhow!(e))?;
            let test_cfg = SynthConfig {
                n: 5 * n,
                seed: mix_seed(cfg.seed, 14, stream),
                ..base.clone()
            };
            let (test, test_meta) = generate_with_meta(&test_cfg).map_err(|e| anyhow!(e))?;

            let epochs = cfg.epochs.unwrap_or_else(|| default_epochs(cfg.trainer, &cfg.loss));
            let (model, l_star_estimate) = match cfg.trainer {
                TrainerKind::OgdSmooth => {
                    // two-phase step-size scheme: train with the optimistic
                    // step, estimate the optimal loss on held-out data, then
                    // retrain with the matched step
                    let phase1 = train_model(
                        TrainerKind::OgdSmooth,
                        &cfg.loss,
                        &spec,
                        &train,
                        epochs,
                        0.0,
                        mix_seed(cfg.seed, 15, stream),
                    )
                    .map_err(|e| anyhow!(e))?;
                    let est =
                        floor_adjusted_loss(&cfg.loss, &val, &phase1.weights.w).max(0.0);
                    let phase2 = train_model(
                        TrainerKind::OgdSmooth,
                        &cfg.loss,
                        &spec,
                        &train,
                        epochs,
                        est,
                        mix_seed(cfg.seed, 16, stream),
                    )
                    .map_err(|e| anyhow!(e))?;
                    (phase2, est)
                }
                other => {
                    let model = train_model(
                        other,
                        &cfg.loss,
                        &spec,
                        &train,
                        epochs,
                        0.0,
                        mix_seed(cfg.seed, 15, stream),
                    )
                    .map_err(|e| anyhow!(e))?;
                    (model, 0.0)
                }
            };

            let w = &model.weights.w;
            let test_adj = floor_adjusted_loss(&cfg.loss, &test, w);
            let train_adj = floor_adjusted_loss(&cfg.loss, &train, w);
            let comp = match cfg.mode {
                RateMode::Realizable => {
                    let oracle = test_meta
                        .oracle_weights
                        .as_ref()
                        .context("realizable mode must expose the oracle")?;
                    let at_oracle = floor_adjusted_loss(&cfg.loss, &test, oracle);
                    anyhow::ensure!(
                        at_oracle.abs() <= 1e-9,
                        "oracle floor is {at_oracle}, expected 0"
                    );
                    at_oracle
                }
                RateMode::Noisy => {
                    let g_w = w_space_lipschitz(&cfg.loss, &spec, &test);
                    let init = test_meta.oracle_weights.clone().unwrap_or_else(|| vec![0.0; cfg.d]);
                    let (w_comp, _) = rerm_minimize(
                        &cfg.loss,
                        &test,
                        &spec,
                        0.0,
                        1500,
                        1e-9,
                        g_w,
                        Some(&init),
                    );
                    floor_adjusted_loss(&cfg.loss, &test, &w_comp)
                }
            };
            let excess = test_adj - comp;

            let bound_rerm = if cfg.trainer == TrainerKind::Rerm {
                let constants = cfg.loss.constants(&spec, cfg.m);
                rankbench_core::bounds::bound_rerm(&BoundInputs {
                    g_inf: constants.lipschitz_inf,
                    g_l2: constants.lipschitz_l2,
                    h_inf: constants.smoothness_inf,
                    b: constants.uniform_bound,
                    spec,
                    m: cfg.m,
                    n,
                    d: cfg.d,
                    delta: 0.05,
                    l_star: None,
                })
                .ok()
            } else {
                None
            };
            Ok(RateRow {
                n,
                trial,
                data_seed: base.seed,
                excess,
                train_loss_adjusted: train_adj,
                test_loss_adjusted: test_adj,
                l_star_estimate,
                bound_rerm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| (r.n, r.trial));

    let summary = summarize_rate(cfg, &rows)?;
    Ok((rows, summary))
}

fn ols_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    sxy / sxx
}

fn summarize_rate(cfg: &RateConfig, rows: &[RateRow]) -> Result<RateSummary> {
    let per_n: Vec<(usize, Vec<f64>)> = cfg
        .n_values
        .iter()
        .map(|&n| {
            let mut v: Vec<(usize, f64)> = rows
                .iter()
                .filter(|r| r.n == n)
                .map(|r| (r.trial, r.excess))
                .collect();
            v.sort_by_key(|x| x.0);
            (n, v.into_iter().map(|x| x.1).collect())
        })
        .collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mean_excess: Vec<(usize, f64)> =
        per_n.iter().map(|(n, v)| (*n, mean(v))).collect();
    for (n, e) in &mean_excess {
        anyhow::ensure!(*e > 0.0, "mean excess at n = {n} is {e}; cannot fit a log-log slope");
    }
    let points: Vec<(f64, f64)> = mean_excess
        .iter()
        .map(|(n, e)| ((*n as f64).ln(), e.ln()))
        .collect();
    let slope = ols_slope(&points);

    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 19, 0));
    let mut slopes = Vec::with_capacity(1000);
    for _ in 0..1000 {
        let mut pts = Vec::with_capacity(per_n.len());
        let mut valid = true;
        for (n, v) in &per_n {
            let resampled: f64 =
                (0..v.len()).map(|_| v[rng.gen_range(0..v.len())]).sum::<f64>() / v.len() as f64;
            if resampled <= 0.0 {
                valid = false;
                break;
            }
            pts.push(((*n as f64).ln(), resampled.ln()));
        }
        if valid {
            slopes.push(ols_slope(&pts));
        }
    }
    anyhow::ensure!(slopes.len() >= 500, "too many degenerate bootstrap resamples");
    slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let slope_ci_lower = slopes[(slopes.len() as f64 * 0.05) as usize];
    let slope_ci_upper = slopes[((slopes.len() as f64 * 0.95) as usize).min(slopes.len() - 1)];
    Ok(RateSummary { mean_excess, slope, slope_ci_lower, slope_ci_upper })
}
