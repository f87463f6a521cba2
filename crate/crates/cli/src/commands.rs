//! Implementations behind the `detect`, `eval`, `sweep` and `compare`
//! subcommands. Each returns its results in memory as well as writing the
//! requested files, so the commands can be driven from tests.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use autoed_core::edge_drawing::{prepare, segments_to_text, AutoOptions};
use autoed_core::evaluation::{aggregate, match_edge_maps, score, Aggregate, EvalResult};
use autoed_core::image::{load_gray, save_raster};
use autoed_core::{detect_edges, DetectionParams, DetectionResult, EdgeMap, MagnitudeMode, Operator, ThresholdMode};
use rayon::prelude::*;

use crate::dataset::{self, pair_dirs};
use crate::report::{aligned_table, detect_report, summary_line, write_csv, ImageRow, RunConfig, VariantRow};
use crate::sweep::{evaluate_mode, run_sweep, thread_pool, SweepGrid, SweepOutcome};

/// Fixed configuration of the "original" rows in comparison tables.
pub const ORIGINAL_GRAD_THR: f64 = 50.0;
pub const ORIGINAL_ANCHOR_THR: f64 = 10.0;
pub const ORIGINAL_GK: usize = 9;
pub const ORIGINAL_SI: usize = 1;

#[derive(Clone, Debug)]
pub struct DetectOptions {
    pub image: PathBuf,
    pub params: DetectionParams,
    /// Edge map destination; defaults to `<stem>_edges.pgm` next to the input.
    pub out: Option<PathBuf>,
    pub segments: Option<PathBuf>,
    pub magnitude_dump: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct DetectOutcome {
    pub edge_map_path: PathBuf,
    pub report_path: PathBuf,
    pub report: String,
    pub result: DetectionResult,
}

fn default_edge_path(image: &Path) -> PathBuf {
    let stem = image.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "image".into());
    image.with_file_name(format!("{stem}_edges.pgm"))
}

pub fn cmd_detect(opts: &DetectOptions) -> Result<DetectOutcome> {
    let img = load_gray(&opts.image)?;
    let result = detect_edges(&img, &opts.params)
        .with_context(|| format!("detecting edges in {}", opts.image.display()))?;
    let edge_map_path = opts.out.clone().unwrap_or_else(|| default_edge_path(&opts.image));
    save_raster(&result.edge_map.to_gray(), &edge_map_path)?;
    let report_path = edge_map_path.with_extension("txt");
    let report = detect_report(&opts.image, &opts.params, &result);
    std::fs::write(&report_path, &report).with_context(|| format!("writing {}", report_path.display()))?;
    if let Some(path) = &opts.segments {
        std::fs::write(path, segments_to_text(&result.segments)).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &opts.magnitude_dump {
        let prepared = prepare(&img, opts.params.operator, opts.params.gaussian_size, opts.params.magnitude)?;
        save_raster(&prepared.field.magnitude_image(), path)?;
    }
    Ok(DetectOutcome {
        edge_map_path,
        report_path,
        report,
        result,
    })
}

#[derive(Clone, Debug)]
pub struct EvalOptions {
    pub pred_dir: PathBuf,
    pub gt_dir: PathBuf,
    pub tolerance: usize,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct EvalOutcome {
    pub rows: Vec<ImageRow>,
    /// `(image id, message)` for every file that could not be scored.
    pub failures: Vec<(String, String)>,
    pub aggregate: Option<Aggregate>,
    pub summary: String,
}

impl EvalOutcome {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

fn eval_one(pred: &Path, gt: &Path, tolerance: usize) -> Result<EvalResult> {
    let pred = EdgeMap::from_gray(&load_gray(pred)?);
    let gt = EdgeMap::from_gray(&load_gray(gt)?);
    Ok(score(match_edge_maps(&pred, &gt, tolerance)?))
}

/// Scores every predicted map against the ground-truth map of the same
/// stem. Per-file failures are collected and the run continues.
pub fn cmd_eval(opts: &EvalOptions) -> Result<EvalOutcome> {
    let (pairs, unpaired) = pair_dirs(&opts.pred_dir, &opts.gt_dir)?;
    let mut failures: Vec<(String, String)> = unpaired.into_iter().map(|u| (u, "no counterpart".to_string())).collect();
    let mut rows = Vec::new();
    let mut evals = Vec::new();
    let config = RunConfig::default();
    for pair in &pairs {
        match eval_one(&pair.image, &pair.ground_truth, opts.tolerance) {
            Ok(eval) => {
                rows.push(ImageRow::new(&pair.id, &config, None, &eval));
                evals.push(eval);
            }
            Err(e) => failures.push((pair.id.clone(), format!("{e:#}"))),
        }
    }
    let aggregate = aggregate(&evals).ok();
    let summary = match &aggregate {
        Some(agg) => summary_line(agg),
        None => "images=0".to_string(),
    };
    if let Some(out) = &opts.out {
        write_csv(out, &rows)?;
    }
    Ok(EvalOutcome {
        rows,
        failures,
        aggregate,
        summary,
    })
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub root: PathBuf,
    pub grid: SweepGrid,
    pub tolerance: usize,
    pub magnitude: MagnitudeMode,
    pub jobs: usize,
    /// Directory for `sweep.csv`, `sweep_images.csv`, `timings.csv` and
    /// `manifest.txt`.
    pub out: Option<PathBuf>,
}

pub fn cmd_sweep(opts: &SweepOptions) -> Result<SweepOutcome> {
    let pairs = dataset::load(&opts.root)?;
    let started = Instant::now();
    let outcome = run_sweep(&pairs, &opts.grid, opts.tolerance, opts.magnitude, opts.jobs)?;
    if let Some(dir) = &opts.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write_csv(&dir.join("sweep.csv"), &outcome.variants)?;
        write_csv(&dir.join("sweep_images.csv"), &outcome.images)?;
        write_csv(&dir.join("timings.csv"), &outcome.timings)?;
        let manifest = format!(
            "dataset={}\nout={}\nimages={}\nvariants={}\nrows={}\njobs={}\ntolerance={}\nwall_ms={:.1}\n",
            opts.root.display(),
            dir.display(),
            pairs.len(),
            outcome.variants.len(),
            outcome.images.len(),
            opts.jobs,
            opts.tolerance,
            started.elapsed().as_secs_f64() * 1e3,
        );
        std::fs::write(dir.join("manifest.txt"), manifest)?;
    }
    Ok(outcome)
}

#[derive(Clone, Debug)]
pub struct CompareOptions {
    pub root: PathBuf,
    pub operators: Vec<Operator>,
    /// Kernel size for the auto rows.
    pub gk: usize,
    pub tolerance: usize,
    pub magnitude: MagnitudeMode,
    pub auto: AutoOptions,
    pub jobs: usize,
    /// Directory for `compare.csv`, `compare_images.csv` and `compare.txt`.
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct CompareOutcome {
    /// Two rows per operator: manual with the fixed original parameters,
    /// then auto.
    pub rows: Vec<VariantRow>,
    pub images: Vec<ImageRow>,
    pub table: String,
}

impl CompareOutcome {
    pub fn row(&self, operator: Operator, mode: &str) -> Option<&VariantRow> {
        self.rows.iter().find(|r| r.operator == operator.name() && r.mode == mode)
    }
}

pub fn cmd_compare(opts: &CompareOptions) -> Result<CompareOutcome> {
    let pairs = dataset::load(&opts.root)?;
    autoed_core::gradient::gaussian_kernel(opts.gk)?;
    let pool = thread_pool(opts.jobs)?;
    let per_operator: Vec<(Vec<ImageRow>, Vec<VariantRow>)> = pool.install(|| {
        opts.operators
            .par_iter()
            .map(|&op| {
                let original_mode = ThresholdMode::Manual {
                    grad_thr: ORIGINAL_GRAD_THR,
                    anchor_thr: ORIGINAL_ANCHOR_THR,
                    scan_interval: ORIGINAL_SI,
                };
                let original_cfg = RunConfig {
                    operator: op.name().into(),
                    mode: "manual".into(),
                    grad_thr: Some(ORIGINAL_GRAD_THR),
                    anchor_thr: Some(ORIGINAL_ANCHOR_THR),
                    gk: Some(ORIGINAL_GK),
                    si: Some(ORIGINAL_SI),
                };
                let auto_cfg = RunConfig {
                    operator: op.name().into(),
                    mode: "auto".into(),
                    grad_thr: None,
                    anchor_thr: None,
                    gk: Some(opts.gk),
                    si: Some(1),
                };
                let prep_original = pairs
                    .iter()
                    .map(|p| prepare(&p.image, op, ORIGINAL_GK, opts.magnitude))
                    .collect::<autoed_core::Result<Vec<_>>>()?;
                let prep_auto = if opts.gk == ORIGINAL_GK {
                    prep_original.clone()
                } else {
                    pairs
                        .iter()
                        .map(|p| prepare(&p.image, op, opts.gk, opts.magnitude))
                        .collect::<autoed_core::Result<Vec<_>>>()?
                };
                let (mut images, original) =
                    evaluate_mode(&original_cfg, &prep_original, &pairs, &original_mode, opts.tolerance)?;
                let (auto_images, auto) =
                    evaluate_mode(&auto_cfg, &prep_auto, &pairs, &ThresholdMode::Auto(opts.auto), opts.tolerance)?;
                images.extend(auto_images);
                Ok((images, vec![original, auto]))
            })
            .collect::<Result<_>>()
    })?;

    let mut rows = Vec::new();
    let mut images = Vec::new();
    for (i, r) in per_operator {
        images.extend(i);
        rows.extend(r);
    }
    let table = compare_table(&rows);
    if let Some(dir) = &opts.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write_csv(&dir.join("compare.csv"), &rows)?;
        write_csv(&dir.join("compare_images.csv"), &images)?;
        std::fs::write(dir.join("compare.txt"), &table)?;
    }
    Ok(CompareOutcome { rows, images, table })
}

fn compare_table(rows: &[VariantRow]) -> String {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let label = if r.mode == "manual" { "original" } else { "proposed" };
            vec![
                r.operator.clone(),
                label.to_string(),
                format!("{:.3}", r.recall),
                format!("{:.3}", r.precision),
                format!("{:.3}", r.f1),
            ]
        })
        .collect();
    aligned_table(&["operator", "ed", "R", "P", "F1"], &cells, 2)
}
