use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use autoed::commands::{
    cmd_compare, cmd_detect, cmd_eval, cmd_sweep, CompareOptions, DetectOptions, EvalOptions, SweepOptions,
    ORIGINAL_ANCHOR_THR, ORIGINAL_GK, ORIGINAL_GRAD_THR, ORIGINAL_SI,
};
use autoed::config::Config;
use autoed::sweep::{parse_int_list, parse_list, parse_operators, SweepGrid};
use autoed_core::edge_drawing::{AutoOptions, OtsuSource};
use autoed_core::evaluation::DEFAULT_TOLERANCE;
use autoed_core::{DetectionParams, MagnitudeMode, Operator, ThresholdMode};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "autoed", version, about = "Edge Drawing detector with Otsu-derived thresholds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Detect edges in one image.
    Detect(DetectArgs),
    /// Score predicted edge maps against ground truth.
    Eval(EvalArgs),
    /// Run a parameter grid over a dataset.
    Sweep(SweepArgs),
    /// Original (fixed thresholds) vs automatic thresholds, per operator.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// key=value file; explicit flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Magnitude formula: approx (|Gx|+|Gy|) or exact.
    #[arg(long)]
    magnitude: Option<String>,
}

#[derive(Args, Debug)]
struct DetectArgs {
    image: PathBuf,
    #[arg(long)]
    operator: Option<String>,
    /// Derive thresholds from the image's Otsu threshold.
    #[arg(long)]
    auto: bool,
    #[arg(long)]
    grad_thr: Option<f64>,
    #[arg(long)]
    anchor_thr: Option<f64>,
    /// Scan interval.
    #[arg(long)]
    si: Option<usize>,
    /// Gaussian kernel size.
    #[arg(long)]
    gk: Option<usize>,
    #[arg(long)]
    min_length: Option<usize>,
    /// Otsu input in auto mode: smoothed or magnitude.
    #[arg(long)]
    otsu_source: Option<String>,
    /// Edge map path (.pgm or .png).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write segments as `x,y` chains, one per line.
    #[arg(long)]
    segments: Option<PathBuf>,
    /// Also write the gradient magnitude, rescaled to 0..255.
    #[arg(long)]
    dump_magnitude: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct EvalArgs {
    pred_dir: PathBuf,
    gt_dir: PathBuf,
    #[arg(long)]
    tolerance: Option<usize>,
    /// Per-image CSV destination.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Dataset root containing images/ and gt/.
    root: PathBuf,
    /// Comma-separated operators, or `all`.
    #[arg(long, alias = "operators")]
    operator: Option<String>,
    /// Gaussian sizes: list `3,5` or range `3:9:2`.
    #[arg(long)]
    gk: Option<String>,
    /// Gradient thresholds (list or range).
    #[arg(long)]
    gt: Option<String>,
    /// Anchor thresholds (list or range).
    #[arg(long)]
    ta: Option<String>,
    /// Scan intervals (list or range).
    #[arg(long)]
    si: Option<String>,
    #[arg(long)]
    tolerance: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct CompareArgs {
    root: PathBuf,
    #[arg(long, alias = "operators")]
    operator: Option<String>,
    /// Gaussian size for the auto rows.
    #[arg(long)]
    gk: Option<usize>,
    #[arg(long)]
    tolerance: Option<usize>,
    #[arg(long)]
    otsu_source: Option<String>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn load_config(common: &Common) -> Result<Config> {
    match &common.config {
        Some(path) => Config::load(path),
        None => Ok(Config::default()),
    }
}

fn magnitude(common: &Common, cfg: &Config) -> Result<MagnitudeMode> {
    Ok(cfg.or(common.magnitude.clone(), "magnitude")?
        .map(|m| m.parse::<MagnitudeMode>())
        .transpose()?
        .unwrap_or_default())
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn run_detect(args: DetectArgs) -> Result<()> {
    let cfg = load_config(&args.common)?;
    let operator: Operator = cfg.or(args.operator, "operator")?.as_deref().unwrap_or("sobel").parse()?;
    let gk = cfg.or(args.gk, "gk")?.unwrap_or(ORIGINAL_GK);
    let auto = args.auto || cfg.flag("auto")?;
    let mode = if auto {
        if args.grad_thr.is_some() || args.anchor_thr.is_some() || args.si.is_some() {
            bail!("--auto derives thresholds and fixes the scan interval; drop --grad-thr/--anchor-thr/--si");
        }
        let source = cfg.or(args.otsu_source, "otsu-source")?
            .map(|s| s.parse::<OtsuSource>())
            .transpose()?
            .unwrap_or_default();
        ThresholdMode::Auto(AutoOptions {
            source,
            ..AutoOptions::default()
        })
    } else {
        ThresholdMode::Manual {
            grad_thr: cfg.or(args.grad_thr, "grad-thr")?.unwrap_or(ORIGINAL_GRAD_THR),
            anchor_thr: cfg.or(args.anchor_thr, "anchor-thr")?.unwrap_or(ORIGINAL_ANCHOR_THR),
            scan_interval: cfg.or(args.si, "si")?.unwrap_or(ORIGINAL_SI),
        }
    };
    let params = DetectionParams {
        operator,
        gaussian_size: gk,
        mode,
        magnitude: magnitude(&args.common, &cfg)?,
        min_segment_length: cfg.or(args.min_length, "min-length")?.unwrap_or(1),
    };
    let out = cfg.or(args.out, "out")?;
    let outcome = cmd_detect(&DetectOptions {
        image: args.image,
        params,
        out,
        segments: args.segments,
        magnitude_dump: args.dump_magnitude,
    })?;
    print!("{}", outcome.report);
    println!("edge_map={}", outcome.edge_map_path.display());
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<bool> {
    let cfg = load_config(&args.common)?;
    let outcome = cmd_eval(&EvalOptions {
        pred_dir: args.pred_dir,
        gt_dir: args.gt_dir,
        tolerance: cfg.or(args.tolerance, "tolerance")?.unwrap_or(DEFAULT_TOLERANCE),
        out: cfg.or(args.out, "out")?,
    })?;
    for (id, msg) in &outcome.failures {
        eprintln!("error: {id}: {msg}");
    }
    for row in &outcome.rows {
        println!(
            "{}: tp={} fp={} fn={} precision={:.3} recall={:.3} f1={:.3}",
            row.image_id, row.tp, row.fp, row.fn_, row.precision, row.recall, row.f1
        );
    }
    println!("{}", outcome.summary);
    Ok(outcome.ok())
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let cfg = load_config(&args.common)?;
    let operators = parse_operators(cfg.or(args.operator, "operator")?.as_deref().unwrap_or("sobel"))?;
    let mut grid = SweepGrid::default_for(operators);
    if let Some(v) = cfg.or(args.gk, "gk")? {
        grid.gk_values = parse_int_list(&v)?;
    }
    if let Some(v) = cfg.or(args.gt, "gt")? {
        grid.gt_values = parse_list(&v)?;
    }
    if let Some(v) = cfg.or(args.ta, "ta")? {
        grid.ta_values = parse_list(&v)?;
    }
    if let Some(v) = cfg.or(args.si, "si")? {
        grid.si_values = parse_int_list(&v)?;
    }
    let out = cfg.or(args.out, "out")?.unwrap_or_else(|| PathBuf::from("sweep-out"));
    let outcome = cmd_sweep(&SweepOptions {
        root: args.root,
        grid,
        tolerance: cfg.or(args.tolerance, "tolerance")?.unwrap_or(DEFAULT_TOLERANCE),
        magnitude: magnitude(&args.common, &cfg)?,
        jobs: cfg.or(args.jobs, "jobs")?.unwrap_or_else(default_jobs),
        out: Some(out.clone()),
    })?;
    println!("variants={} rows={} out={}", outcome.variants.len(), outcome.images.len(), out.display());
    for best in outcome.variants.iter().take(5) {
        println!("{} f1={:.3} precision={:.3} recall={:.3}", best.key(), best.f1, best.precision, best.recall);
    }
    Ok(())
}

fn run_compare(args: CompareArgs) -> Result<()> {
    let cfg = load_config(&args.common)?;
    let operators = parse_operators(cfg.or(args.operator, "operator")?.as_deref().unwrap_or("all"))?;
    let source = cfg.or(args.otsu_source, "otsu-source")?
        .map(|s| s.parse::<OtsuSource>())
        .transpose()?
        .unwrap_or_default();
    let outcome = cmd_compare(&CompareOptions {
        root: args.root,
        operators,
        gk: cfg.or(args.gk, "gk")?.unwrap_or(ORIGINAL_GK),
        tolerance: cfg.or(args.tolerance, "tolerance")?.unwrap_or(DEFAULT_TOLERANCE),
        magnitude: magnitude(&args.common, &cfg)?,
        auto: AutoOptions {
            source,
            ..AutoOptions::default()
        },
        jobs: cfg.or(args.jobs, "jobs")?.unwrap_or_else(default_jobs),
        out: cfg.or(args.out, "out")?,
    })?;
    print!("{}", outcome.table);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Detect(a) => run_detect(a).map(|_| true),
        Command::Eval(a) => run_eval(a),
        Command::Sweep(a) => run_sweep(a).map(|_| true),
        Command::Compare(a) => run_compare(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
