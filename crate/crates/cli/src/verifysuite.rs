//! Constant/inequality verification suites behind the `verify` subcommand:
//! gradient-norm suprema against the analytic Lipschitz constants, Hessian
//! operator norms, the quadratic pairwise-gradient witness, the dual-norm
//! identity, the smoothness inequalities, and finite-difference spot checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rankbench_core::project::norm_l1;
use rankbench_core::verify::{
    empirical_lipschitz_inf, finite_diff_gradient, op_norm_inf_to_1, ranksvm_off_kink,
    self_bounding_check, vector_smoothness_check, verify_lemma1, SamplerSpec,
};
use rankbench_core::{ClassSpec, QueryInstance, SurrogateLoss};

/// One verification check: `pass` relates `observed` to `bound` according to
/// the check's own direction (upper bound, lower bound, or equality).
#[derive(Debug, Clone)]
pub struct CheckRow {
    pub suite: String,
    pub check: String,
    pub params: String,
    pub observed: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

impl CheckRow {
    fn upper(suite: &str, check: &str, params: String, observed: f64, bound: f64) -> Self {
        Self {
            suite: suite.into(),
            check: check.into(),
            params,
            observed,
            bound,
            margin: bound - observed,
            pass: observed <= bound * (1.0 + 1e-9),
        }
    }

    fn equal(suite: &str, check: &str, params: String, observed: f64, expected: f64) -> Self {
        Self {
            suite: suite.into(),
            check: check.into(),
            params,
            observed,
            bound: expected,
            margin: expected - observed,
            pass: (observed - expected).abs() <= 1e-9 * (1.0 + expected.abs()),
        }
    }

    fn lower(suite: &str, check: &str, params: String, observed: f64, threshold: f64) -> Self {
        Self {
            suite: suite.into(),
            check: check.into(),
            params,
            observed,
            bound: threshold,
            margin: observed - threshold,
            pass: observed >= threshold,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// listnet | sdcg | ranksvm | all
    pub loss: String,
    pub trials: usize,
    pub seed: u64,
    /// RankSVM witness sweep range (powers of two within it)
    pub sweep_m: (usize, usize),
    /// SDCG smoothing values; a single flag value narrows the grid
    pub sigmas: Vec<f64>,
    pub y_maxes: Vec<u32>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            loss: "all".into(),
            trials: 100_000,
            seed: 7,
            sweep_m: (2, 64),
            sigmas: vec![0.1, 1.0, 10.0],
            y_maxes: vec![1, 2, 3, 4],
        }
    }
}

fn gradient_fd_row(loss: &SurrogateLoss, suite: &str, points: usize, seed: u64) -> CheckRow {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    let mut checked = 0;
    while checked < points {
        let m = rng.gen_range(1..=64);
        let s: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let y: Vec<f64> = (0..m).map(|_| rng.gen_range(0..5) as f64).collect();
        if matches!(loss, SurrogateLoss::RankSvm) && !ranksvm_off_kink(&s, &y, 1e-6) {
            continue;
        }
        let fd = finite_diff_gradient(loss, &s, &y, 1e-6).expect("valid point");
        let closed = loss.gradient(&s, &y).expect("valid point");
        let scale = 1.0 + closed.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        let err = fd
            .iter()
            .zip(&closed)
            .fold(0.0_f64, |a, (u, v)| a.max((u - v).abs()))
            / scale;
        worst = worst.max(err);
        checked += 1;
    }
    CheckRow::upper(suite, "gradient_finite_difference", format!("points={points}"), worst, 1e-5)
}

fn listnet_suite(opts: &VerifyOptions) -> Vec<CheckRow> {
    let suite = "listnet";
    let loss = SurrogateLoss::ListNet;
    let mut rows = Vec::new();
    let per_m = (opts.trials / 4).max(1);
    for m in [2usize, 16, 128, 512] {
        let sampler = SamplerSpec {
            m,
            score_scale: 50.0,
            label_range: 4,
            trials: per_m,
            seed: opts.seed.wrapping_add(m as u64),
        };
        let est = empirical_lipschitz_inf(&loss, &sampler);
        rows.push(CheckRow::upper(
            suite,
            "lipschitz_inf_sup",
            format!("m={m} trials={per_m}"),
            est.sup,
            2.0,
        ));
    }
    // labels spiked on one coordinate, scores on another, growing gap
    let mut adversarial = 0.0_f64;
    for m in [2usize, 16] {
        for t in [5.0, 10.0, 20.0, 40.0] {
            let mut y = vec![0.0; m];
            y[0] = t;
            let mut s = vec![0.0; m];
            s[1] = t;
            adversarial = adversarial.max(norm_l1(&loss.gradient(&s, &y).unwrap()));
        }
    }
    rows.push(CheckRow::lower(
        suite,
        "lipschitz_adversarial_family",
        "gap up to 40".into(),
        adversarial,
        1.99,
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(101));
    for m in 1..=12usize {
        let mut worst = 0.0_f64;
        for trial in 0..25 {
            let s: Vec<f64> = if trial == 0 {
                vec![0.0; m]
            } else {
                (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect()
            };
            let h = loss.hessian(&s, &vec![0.0; m]).unwrap();
            worst = worst.max(op_norm_inf_to_1(&h).unwrap().exact.unwrap());
        }
        rows.push(CheckRow::upper(
            suite,
            "hessian_inf_to_1_exact",
            format!("m={m}"),
            worst,
            2.0,
        ));
    }
    for m in [64usize, 256, 512] {
        let mut worst = 0.0_f64;
        for _ in 0..25 {
            let s: Vec<f64> = (0..m).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let h = loss.hessian(&s, &vec![0.0; m]).unwrap();
            worst = worst.max(op_norm_inf_to_1(&h).unwrap().abs_sum_bound);
        }
        rows.push(CheckRow::upper(
            suite,
            "hessian_abs_sum_bound",
            format!("m={m}"),
            worst,
            2.0,
        ));
    }

    // smoothness inequalities: report the worst lhs/rhs ratio
    let spec = ClassSpec::l2(1.0, 1.5).unwrap();
    let draws = (opts.trials / 10).max(1);
    let mut worst_ratio = 0.0_f64;
    for _ in 0..draws {
        let m = rng.gen_range(1..=32);
        let y: Vec<f64> = (0..m).map(|_| rng.gen_range(0..5) as f64).collect();
        let s1: Vec<f64> = (0..m).map(|_| rng.gen_range(-6.0..6.0)).collect();
        let s2: Vec<f64> = (0..m).map(|_| rng.gen_range(-6.0..6.0)).collect();
        let check = vector_smoothness_check(&loss, &s1, &s2, &y).unwrap();
        if check.rhs > 0.0 {
            worst_ratio = worst_ratio.max(check.lhs / check.rhs);
        } else {
            worst_ratio = worst_ratio.max(if check.lhs > 0.0 { f64::INFINITY } else { 0.0 });
        }
    }
    rows.push(CheckRow::upper(
        suite,
        "vector_smoothness_ratio",
        format!("draws={draws}"),
        worst_ratio,
        1.0,
    ));

    let mut worst_ratio = 0.0_f64;
    for _ in 0..draws {
        let m = rng.gen_range(1..=32);
        let d = rng.gen_range(1..=4);
        let rows_x: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
                raw.iter().map(|x| x * 1.5 / norm).collect()
            })
            .collect();
        let labels: Vec<f64> = (0..m).map(|_| rng.gen_range(0..4) as f64).collect();
        let inst = QueryInstance::from_rows(rows_x, labels).unwrap();
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let check = self_bounding_check(&loss, &spec, &inst, &w).unwrap();
        if check.rhs > 0.0 {
            worst_ratio = worst_ratio.max(check.lhs / check.rhs);
        }
    }
    rows.push(CheckRow::upper(
        suite,
        "self_bounding_ratio",
        format!("draws={draws}"),
        worst_ratio,
        1.0,
    ));

    rows.push(gradient_fd_row(&loss, suite, 500, opts.seed.wrapping_add(313)));
    rows
}

fn sdcg_suite(opts: &VerifyOptions) -> Vec<CheckRow> {
    let suite = "sdcg";
    let mut rows = Vec::new();
    let combos: Vec<(f64, u32)> = opts
        .sigmas
        .iter()
        .flat_map(|&s| opts.y_maxes.iter().map(move |&y| (s, y)))
        .collect();
    let per_combo = (opts.trials / combos.len().max(1)).max(1);
    for (sigma, y_max) in combos {
        let loss = SurrogateLoss::smooth_dcg1(sigma, y_max).unwrap();
        let bound = loss
            .constants(&ClassSpec::l2(1.0, 1.0).unwrap(), 512)
            .lipschitz_inf;
        let mut sup = 0.0_f64;
        let mut m = 1usize;
        let mut remaining = per_combo;
        while remaining > 0 {
            let chunk = (per_combo / 10).max(1).min(remaining);
            let sampler = SamplerSpec {
                m,
                score_scale: 5.0 * sigma,
                label_range: y_max,
                trials: chunk,
                seed: opts.seed.wrapping_add((sigma * 1000.0) as u64 + m as u64),
            };
            sup = sup.max(empirical_lipschitz_inf(&loss, &sampler).sup);
            remaining -= chunk;
            m = (m * 2).min(512);
        }
        rows.push(CheckRow::upper(
            suite,
            "lipschitz_inf_sup",
            format!("sigma={sigma} y_max={y_max} trials={per_combo}"),
            sup,
            bound,
        ));
    }
    rows.push(gradient_fd_row(
        &SurrogateLoss::smooth_dcg1(opts.sigmas[0].max(0.5), 4).unwrap(),
        suite,
        300,
        opts.seed.wrapping_add(631),
    ));
    rows
}

fn ranksvm_suite(opts: &VerifyOptions) -> Vec<CheckRow> {
    let suite = "ranksvm";
    let mut rows = Vec::new();
    let (lo, hi) = opts.sweep_m;
    let mut m = lo.max(2);
    while m <= hi {
        let mut y = vec![0.0; m];
        for yi in y.iter_mut().take(m / 2) {
            *yi = 1.0;
        }
        let g = SurrogateLoss::RankSvm.gradient(&vec![0.0; m], &y).unwrap();
        rows.push(CheckRow::equal(
            suite,
            "witness_subgradient_l1",
            format!("m={m}"),
            norm_l1(&g),
            (m * m) as f64 / 2.0,
        ));
        m *= 2;
    }
    rows.push(gradient_fd_row(&SurrogateLoss::RankSvm, suite, 300, opts.seed.wrapping_add(977)));
    rows
}

fn lemma1_suite(opts: &VerifyOptions) -> Vec<CheckRow> {
    let suite = "norm_identity";
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1543));
    let mut rows = Vec::new();
    for (m, d) in [(2usize, 2usize), (3, 5), (8, 3)] {
        for p in [1.0, 2.0, f64::INFINITY] {
            let mut all_hold = true;
            let mut worst_gap = 0.0_f64;
            for _ in 0..25 {
                let mat: Vec<Vec<f64>> = (0..m)
                    .map(|_| (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect())
                    .collect();
                let rep = verify_lemma1(&mat, p, 400, rng.gen()).unwrap();
                all_hold &= rep.holds;
                worst_gap = worst_gap.max((rep.basis_sup - rep.closed_form).abs());
            }
            rows.push(CheckRow {
                suite: suite.into(),
                check: "basis_vector_equality".into(),
                params: format!("shape={m}x{d} p={p}"),
                observed: worst_gap,
                bound: 1e-12,
                margin: 1e-12 - worst_gap,
                pass: all_hold,
            });
        }
    }
    rows
}

/// Runs the selected suites. `loss = "all"` runs everything including the
/// norm-identity suite.
pub fn run_verify(opts: &VerifyOptions) -> Vec<CheckRow> {
    let mut rows = Vec::new();
    match opts.loss.as_str() {
        "listnet" => rows.extend(listnet_suite(opts)),
        "sdcg" => rows.extend(sdcg_suite(opts)),
        "ranksvm" => rows.extend(ranksvm_suite(opts)),
        _ => {
            rows.extend(listnet_suite(opts));
            rows.extend(sdcg_suite(opts));
            rows.extend(ranksvm_suite(opts));
            rows.extend(lemma1_suite(opts));
        }
    }
    rows
}
