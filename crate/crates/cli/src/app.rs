//! Command-line surface: `verify`, `gap-vs-m`, `rate-vs-n`, `bounds`,
//! `train`, and `parse`. Every command is deterministic given its flags and
//! seed; CSV goes to `--out` (stdout otherwise) and the plain-text summary
//! goes to stdout (stderr when the CSV occupies stdout).
//!
//! Exit codes: 0 all checks passed, 1 a check failed, 2 usage error.

use crate::config::{inject_config, parse_list, parse_range};
use crate::csvio::{num, opt_num, Csv};
use crate::experiments::{
    gap_vs_m, rate_vs_n, GapConfig, RateConfig, RateMode, TrainerKind,
};
use crate::verifysuite::{run_verify, VerifyOptions};
use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rankbench_core::bounds::{BoundInputs, BoundReport};
use rankbench_core::letor::{parse_letor, serialize_letor};
use rankbench_core::synth::{generate, split, LabelMode, RowNorm, SynthConfig};
use rankbench_core::train::{
    dataset_loss, erm_train, ogd_train, rerm_train, StepPolicy, TrainConfig,
};
use rankbench_core::{ClassSpec, Dataset, NormKind, SurrogateLoss};
use std::fs;
use std::io::BufReader;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "rankbench",
    about = "Listwise learning-to-rank workbench: losses, trainers, bounds, and scaling experiments",
    version,
    args_override_self = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the constant/inequality verification suites
    Verify(VerifyArgs),
    /// Generalization gap as the document-list length m grows
    #[command(name = "gap-vs-m")]
    GapVsM(GapArgs),
    /// Excess risk decay as the sample size n grows
    #[command(name = "rate-vs-n")]
    RateVsN(RateArgs),
    /// Evaluate every bound formula over a configuration grid
    Bounds(BoundsArgs),
    /// Train a single model on synthetic or LETOR data
    Train(TrainArgs),
    /// Parse a LETOR file and check the serialize/parse round trip
    Parse(ParseArgs),
}

#[derive(Args)]
struct CommonIo {
    /// Write the CSV here (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat `key = value` file; explicit flags override file entries
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// listnet | sdcg | ranksvm | all
    #[arg(long, default_value = "all")]
    loss: String,
    /// Monte-Carlo draws per suite
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// RankSVM witness sweep, powers of two inside lo:hi
    #[arg(long, default_value = "2:64")]
    sweep_m: String,
    /// SDCG smoothing (narrows the default 0.1,1,10 grid)
    #[arg(long)]
    sigma: Option<f64>,
    /// SDCG maximum relevance grade (narrows the default 1..4 grid)
    #[arg(long)]
    ymax: Option<u32>,
    #[command(flatten)]
    io: CommonIo,
}

#[derive(Args)]
struct GapArgs {
    /// listnet | sdcg | ranksvm
    #[arg(long, default_value = "listnet")]
    loss: String,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// rerm | ogd | erm
    #[arg(long, default_value = "rerm")]
    trainer: String,
    /// comma-separated document-list lengths
    #[arg(long, default_value = "5,25,125")]
    m: String,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    d: usize,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 8.0)]
    w2: f64,
    #[arg(long, default_value_t = 1.0)]
    rx: f64,
    #[arg(long, default_value_t = 4)]
    ymax: u32,
    /// label flip probability of the noisy generator (1.0 = pure label
    /// noise, so the gap measures pure overfitting)
    #[arg(long, default_value_t = 1.0)]
    flip: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 20240801)]
    seed: u64,
    /// solver iteration cap (per-loss default when absent)
    #[arg(long)]
    epochs: Option<usize>,
    #[command(flatten)]
    io: CommonIo,
}

#[derive(Args)]
struct RateArgs {
    /// realizable | noisy
    #[arg(long, default_value = "realizable")]
    mode: String,
    /// smooth loss for the optimistic-rate claim
    #[arg(long, default_value = "listnet")]
    loss: String,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// ogd-smooth | rerm
    #[arg(long, default_value = "ogd-smooth")]
    trainer: String,
    /// comma-separated training-set sizes (at least 3)
    #[arg(long, default_value = "100,400,1600,6400")]
    n: String,
    #[arg(long, default_value_t = 8)]
    m: usize,
    #[arg(long, default_value_t = 8)]
    d: usize,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 2.5)]
    w2: f64,
    #[arg(long, default_value_t = 1.0)]
    rx: f64,
    #[arg(long, default_value_t = 2)]
    ymax: u32,
    #[arg(long, default_value_t = 0.25)]
    flip: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    epochs: Option<usize>,
    #[command(flatten)]
    io: CommonIo,
}

#[derive(Args)]
struct BoundsArgs {
    /// l2 | l1
    #[arg(long, default_value = "l2")]
    norm: String,
    /// derive constants from a loss (listnet | sdcg | ranksvm) instead of
    /// passing them explicitly
    #[arg(long)]
    loss: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 4)]
    ymax: u32,
    #[arg(long)]
    g_inf: Option<f64>,
    #[arg(long)]
    g_l2: Option<f64>,
    #[arg(long)]
    h_inf: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// weight radius (W2 or W1 per --norm)
    #[arg(long, default_value_t = 1.0)]
    w: f64,
    /// input radius (row l2 or l-inf per --norm)
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, default_value = "100")]
    m: String,
    #[arg(long, default_value = "100")]
    n: String,
    #[arg(long, default_value_t = 10)]
    d: usize,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long)]
    lstar: Option<f64>,
    #[command(flatten)]
    io: CommonIo,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value = "listnet")]
    loss: String,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// rerm | ogd | ogd-smooth | erm
    #[arg(long, default_value = "rerm")]
    trainer: String,
    /// LETOR file; synthetic data when absent
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    m: usize,
    #[arg(long, default_value_t = 5)]
    d: usize,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    ymax: u32,
    #[arg(long, default_value_t = 0.2)]
    flip: f64,
    #[arg(long, default_value_t = 2.0)]
    w2: f64,
    #[arg(long, default_value_t = 1.0)]
    rx: f64,
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// hold out this fraction for evaluation (0 = train on everything)
    #[arg(long, default_value_t = 0.0)]
    eval_frac: f64,
    #[command(flatten)]
    io: CommonIo,
}

#[derive(Args)]
struct ParseArgs {
    #[arg(long)]
    input: PathBuf,
    /// write the re-serialized corpus here
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_loss(name: &str, sigma: f64, ymax: u32) -> Result<SurrogateLoss> {
    match name {
        "listnet" => Ok(SurrogateLoss::ListNet),
        "sdcg" => SurrogateLoss::smooth_dcg1(sigma, ymax).map_err(|e| anyhow!(e)),
        "ranksvm" => Ok(SurrogateLoss::RankSvm),
        other => bail!("unknown loss {other:?} (listnet | sdcg | ranksvm)"),
    }
}

/// Writes CSV to `--out` (summary to stdout) or to stdout (summary to
/// stderr).
fn emit(io: &CommonIo, csv: &Csv, summary: &str) -> Result<()> {
    match &io.out {
        Some(path) => {
            fs::write(path, csv.render())
                .with_context(|| format!("cannot write {}", path.display()))?;
            print!("{summary}");
        }
        None => {
            print!("{}", csv.render());
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let mut opts = VerifyOptions {
        loss: args.loss.clone(),
        trials: args.trials.max(1),
        seed: args.seed,
        sweep_m: parse_range(&args.sweep_m)?,
        ..VerifyOptions::default()
    };
    if let Some(sigma) = args.sigma {
        opts.sigmas = vec![sigma];
    }
    if let Some(ymax) = args.ymax {
        opts.y_maxes = vec![ymax];
    }
    if !matches!(args.loss.as_str(), "listnet" | "sdcg" | "ranksvm" | "all") {
        bail!("unknown loss {:?} (listnet | sdcg | ranksvm | all)", args.loss);
    }
    let rows = run_verify(&opts);
    let mut csv = Csv::new(vec!["suite", "check", "params", "observed", "bound", "margin", "pass"]);
    for row in &rows {
        csv.push(vec![
            row.suite.clone(),
            row.check.clone(),
            row.params.clone(),
            num(row.observed),
            num(row.bound),
            num(row.margin),
            row.pass.to_string(),
        ]);
    }
    let failed: Vec<&_> = rows.iter().filter(|r| !r.pass).collect();
    let mut summary = format!("verify: {} checks, {} failed\n", rows.len(), failed.len());
    for f in &failed {
        summary.push_str(&format!(
            "  FAIL {} / {} [{}]: observed {} vs bound {}\n",
            f.suite, f.check, f.params, f.observed, f.bound
        ));
    }
    emit(&args.io, &csv, &summary)?;
    Ok(if failed.is_empty() { 0 } else { 1 })
}

fn report_columns() -> Vec<&'static str> {
    BoundReport::CSV_COLUMNS.to_vec()
}

fn cmd_gap_vs_m(args: &GapArgs) -> Result<i32> {
    let cfg = GapConfig {
        loss: parse_loss(&args.loss, args.sigma, args.ymax)?,
        trainer: args.trainer.parse::<TrainerKind>()?,
        m_values: parse_list(&args.m, "m")?,
        n: args.n,
        d: args.d,
        trials: args.trials,
        w2: args.w2,
        rx: args.rx,
        y_max: args.ymax,
        flip_prob: args.flip,
        delta: args.delta,
        seed: args.seed,
        epochs: args.epochs,
    };
    let (rows, summary) = gap_vs_m(&cfg)?;

    let mut columns = vec![
        "sweep", "m", "trial", "seed", "train_loss", "test_loss", "gap", "excess", "ndcg_at_1",
    ];
    columns.extend(report_columns());
    let mut csv = Csv::new(columns);
    for row in &rows {
        let mut fields = vec![
            "m".to_string(),
            row.m.to_string(),
            row.trial.to_string(),
            row.data_seed.to_string(),
            num(row.train_loss),
            num(row.test_loss),
            num(row.gap),
            num(row.excess),
            num(row.ndcg_at_1),
        ];
        fields.extend(row.report.csv_values());
        csv.push(fields);
    }

    let mut text = format!(
        "gap-vs-m: loss={} trainer={} n={} d={} trials={}\n",
        args.loss, args.trainer, cfg.n, cfg.d, cfg.trials
    );
    for (m, gap) in &summary.mean_gaps {
        text.push_str(&format!("  mean gap at m={m}: {gap:.6}\n"));
    }
    text.push_str(&format!(
        "  gap ratio (largest/smallest m): {:.4} (90% CI [{:.4}, {:.4}])\n",
        summary.gap_ratio, summary.ratio_ci_lower, summary.ratio_ci_upper
    ));
    text.push_str(&format!(
        "  baseline complexity-term ratio over the same sweep: {:.4}\n",
        summary.chapelle_ratio
    ));
    if cfg.trainer == TrainerKind::Rerm {
        text.push_str(&format!(
            "  RERM bound domination: {} violations, max excess/bound = {:.4}\n",
            summary.rerm_bound_violations, summary.max_excess_to_bound
        ));
    }
    emit(&args.io, &csv, &text)?;
    Ok(0)
}

fn cmd_rate_vs_n(args: &RateArgs) -> Result<i32> {
    let cfg = RateConfig {
        mode: args.mode.parse::<RateMode>()?,
        loss: parse_loss(&args.loss, args.sigma, args.ymax)?,
        trainer: args.trainer.parse::<TrainerKind>()?,
        n_values: parse_list(&args.n, "n")?,
        m: args.m,
        d: args.d,
        trials: args.trials,
        w2: args.w2,
        rx: args.rx,
        y_max: args.ymax,
        flip_prob: args.flip,
        seed: args.seed,
        epochs: args.epochs,
    };
    let (rows, summary) = rate_vs_n(&cfg)?;

    let mut csv = Csv::new(vec![
        "sweep",
        "n",
        "trial",
        "seed",
        "excess",
        "train_loss_adjusted",
        "test_loss_adjusted",
        "l_star_estimate",
        "bound_rerm",
    ]);
    for row in &rows {
        csv.push(vec![
            "n".to_string(),
            row.n.to_string(),
            row.trial.to_string(),
            row.data_seed.to_string(),
            num(row.excess),
            num(row.train_loss_adjusted),
            num(row.test_loss_adjusted),
            num(row.l_star_estimate),
            opt_num(row.bound_rerm),
        ]);
    }

    let mut text = format!(
        "rate-vs-n: mode={} loss={} trainer={} m={} d={} trials={}\n",
        args.mode, args.loss, args.trainer, cfg.m, cfg.d, cfg.trials
    );
    for (n, e) in &summary.mean_excess {
        text.push_str(&format!("  mean excess at n={n}: {e:.6e}\n"));
    }
    text.push_str(&format!(
        "  fitted log-log slope: {:.4} (90% CI [{:.4}, {:.4}])\n",
        summary.slope, summary.slope_ci_lower, summary.slope_ci_upper
    ));
    emit(&args.io, &csv, &text)?;
    Ok(0)
}

fn cmd_bounds(args: &BoundsArgs) -> Result<i32> {
    let norm_kind = match args.norm.as_str() {
        "l2" => NormKind::L2,
        "l1" => NormKind::L1,
        other => bail!("unknown norm {other:?} (l2 | l1)"),
    };
    let spec = ClassSpec::new(norm_kind, args.w, args.r).map_err(|e| anyhow!(e))?;
    let m_values: Vec<usize> = parse_list(&args.m, "m")?;
    let n_values: Vec<usize> = parse_list(&args.n, "n")?;

    let loss = match &args.loss {
        Some(name) => Some(parse_loss(name, args.sigma, args.ymax)?),
        None => None,
    };

    let mut columns = vec![
        "norm", "m", "n", "d", "delta", "g_inf", "g_l2", "h_inf", "b", "w", "r", "l_star",
    ];
    columns.extend(report_columns());
    let mut csv = Csv::new(columns);
    for &m in &m_values {
        for &n in &n_values {
            let derived = loss.as_ref().map(|l| l.constants(&spec, m));
            let pick = |flag: Option<f64>, derived: Option<f64>, name: &str| -> Result<f64> {
                flag.or(derived)
                    .with_context(|| format!("missing required constant --{name}"))
            };
            let g_inf = pick(args.g_inf, derived.as_ref().map(|c| c.lipschitz_inf), "g-inf")?;
            let g_l2 = pick(args.g_l2, derived.as_ref().map(|c| c.lipschitz_l2), "g-l2")?;
            let b = pick(args.b, derived.as_ref().map(|c| c.uniform_bound), "b")?;
            let h_inf = args.h_inf.or(derived.as_ref().and_then(|c| c.smoothness_inf));
            let inputs = BoundInputs {
                g_inf,
                g_l2,
                h_inf,
                b,
                spec,
                m,
                n,
                d: args.d,
                delta: args.delta,
                l_star: args.lstar,
            };
            inputs.validate().map_err(|e| anyhow!(e))?;
            let report = BoundReport::compute(&inputs);
            let mut fields = vec![
                args.norm.clone(),
                m.to_string(),
                n.to_string(),
                args.d.to_string(),
                num(args.delta),
                num(g_inf),
                num(g_l2),
                opt_num(h_inf),
                num(b),
                num(args.w),
                num(args.r),
                opt_num(args.lstar),
            ];
            fields.extend(report.csv_values());
            csv.push(fields);
        }
    }
    let summary = format!("bounds: {} configurations evaluated\n", m_values.len() * n_values.len());
    emit(&args.io, &csv, &summary)?;
    Ok(0)
}

fn cmd_train(args: &TrainArgs) -> Result<i32> {
    let loss = parse_loss(&args.loss, args.sigma, args.ymax)?;
    let spec = ClassSpec::l2(args.w2, args.rx).map_err(|e| anyhow!(e))?;

    let full: Dataset = match &args.data {
        Some(path) => {
            let file = fs::File::open(path)
                .with_context(|| format!("cannot open {}", path.display()))?;
            parse_letor(BufReader::new(file)).map_err(|e| anyhow!(e))?.dataset
        }
        None => {
            let mut wrng = rand_chacha::ChaCha8Rng::seed_from_u64(args.seed);
            use rand::{Rng, SeedableRng};
            let w_true: Vec<f64> =
                (0..args.d).map(|_| wrng.gen_range(-1.0..1.0)).collect();
            generate(&SynthConfig {
                m: args.m,
                d: args.d,
                n: args.n,
                input_radius: args.rx,
                row_norm: RowNorm::L2,
                label_mode: LabelMode::Noisy {
                    w_true,
                    y_max: args.ymax,
                    flip_prob: args.flip,
                },
                seed: args.seed,
            })
            .map_err(|e| anyhow!(e))?
        }
    };

    let (train, eval) = if args.eval_frac > 0.0 {
        let (a, b) = split(&full, 1.0 - args.eval_frac, args.seed).map_err(|e| anyhow!(e))?;
        (a, Some(b))
    } else {
        (full, None)
    };

    let mut cfg = TrainConfig::new(spec, loss);
    cfg.epochs = args.epochs;
    cfg.seed = args.seed;
    let model = match args.trainer.parse::<TrainerKind>()? {
        TrainerKind::Rerm => rerm_train(&train, &cfg).map_err(|e| anyhow!(e))?,
        TrainerKind::Ogd => {
            cfg.policy = StepPolicy::OgdTheorem2;
            ogd_train(&train, &cfg).map_err(|e| anyhow!(e))?
        }
        TrainerKind::OgdSmooth => {
            cfg.policy = StepPolicy::SmoothEta { l_star_estimate: 0.0 };
            ogd_train(&train, &cfg).map_err(|e| anyhow!(e))?
        }
        TrainerKind::Erm => erm_train(&train, &cfg).map_err(|e| anyhow!(e))?,
    };

    let mut csv = Csv::new(vec!["coordinate", "weight"]);
    for (i, w) in model.weights.w.iter().enumerate() {
        csv.push(vec![i.to_string(), num(*w)]);
    }
    let norm = model.weights.w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut text = format!(
        "train: loss={} trainer={} n={} d={}\n  train loss {:.6}, |w|_2 = {:.6}, converged = {}\n",
        args.loss,
        args.trainer,
        train.len(),
        train.dim(),
        model.train_loss,
        norm,
        model.converged
    );
    if let Some(eval) = &eval {
        let test_loss = dataset_loss(&loss, eval, &model.weights.w);
        text.push_str(&format!(
            "  held-out loss {:.6} over {} queries (gap {:+.6})\n",
            test_loss,
            eval.len(),
            test_loss - model.train_loss
        ));
    }
    for w in &model.warnings {
        text.push_str(&format!("  warning: {w}\n"));
    }
    emit(&args.io, &csv, &text)?;
    Ok(0)
}

fn cmd_parse(args: &ParseArgs) -> Result<i32> {
    let file = fs::File::open(&args.input)
        .with_context(|| format!("cannot open {}", args.input.display()))?;
    let data = match parse_letor(BufReader::new(file)) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("parse failed: {e}");
            return Ok(1);
        }
    };
    let docs: usize = data.dataset.iter().map(|i| i.num_docs()).sum();
    println!(
        "parsed {} queries, {} documents, dimension {}",
        data.dataset.len(),
        docs,
        data.dataset.dim()
    );

    // round trip: serialize and re-parse must reproduce the corpus
    let mut buf = Vec::new();
    serialize_letor(&data.dataset, Some(&data.query_ids), &mut buf).map_err(|e| anyhow!(e))?;
    let reparsed = parse_letor(BufReader::new(&buf[..])).map_err(|e| anyhow!(e))?;
    let mut max_err = 0.0_f64;
    let mut identical = reparsed.query_ids == data.query_ids
        && reparsed.dataset.len() == data.dataset.len();
    if identical {
        'outer: for (a, b) in data.dataset.iter().zip(reparsed.dataset.iter()) {
            if a.labels() != b.labels() || a.dim() != b.dim() {
                identical = false;
                break;
            }
            for (ra, rb) in a.rows().zip(b.rows()) {
                for (x, y) in ra.iter().zip(rb) {
                    let err = (x - y).abs() / (1.0 + x.abs());
                    max_err = max_err.max(err);
                    if err > 1e-9 {
                        identical = false;
                        break 'outer;
                    }
                }
            }
        }
    }
    println!(
        "round trip: {} (max relative feature error {:.3e})",
        if identical { "ok" } else { "MISMATCH" },
        max_err
    );
    if let Some(out) = &args.out {
        fs::write(out, &buf).with_context(|| format!("cannot write {}", out.display()))?;
    }
    Ok(if identical { 0 } else { 1 })
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Verify(args) => cmd_verify(&args),
        Command::GapVsM(args) => cmd_gap_vs_m(&args),
        Command::RateVsN(args) => cmd_rate_vs_n(&args),
        Command::Bounds(args) => cmd_bounds(&args),
        Command::Train(args) => cmd_train(&args),
        Command::Parse(args) => cmd_parse(&args),
    }
}

/// Entry point: expands `--config`, parses, dispatches, maps errors to exit
/// codes.
pub fn run() -> i32 {
    let raw: Vec<String> = std::env::args().collect();
    let args = match inject_config(raw) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 2;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}
