//! Parameter grid sweeps over a paired dataset.
//!
//! Smoothing and gradients depend only on (image, operator, kernel size), so
//! they are computed once and shared by every threshold variant. Variants
//! run in parallel; results come back in grid order and are then stably
//! sorted by descending micro-F1, so the output does not depend on the
//! number of worker threads.

use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use autoed_core::edge_drawing::{detect_prepared, prepare, Prepared};
use autoed_core::evaluation::{aggregate, match_edge_maps, score};
use autoed_core::{MagnitudeMode, Operator, ThresholdMode};
use rayon::prelude::*;

use crate::dataset::LoadedPair;
use crate::report::{ImageRow, RunConfig, TimingRow, VariantRow};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub operators: Vec<Operator>,
    pub gk_values: Vec<usize>,
    pub gt_values: Vec<f64>,
    pub ta_values: Vec<f64>,
    pub si_values: Vec<usize>,
}

impl SweepGrid {
    /// GK 3..9 step 2, GT 10..150 step 10, TA 10..60 step 10, SI 1..5.
    pub fn default_for(operators: Vec<Operator>) -> Self {
        Self {
            operators,
            gk_values: vec![3, 5, 7, 9],
            gt_values: (1..=15).map(|k| 10.0 * k as f64).collect(),
            ta_values: (1..=6).map(|k| 10.0 * k as f64).collect(),
            si_values: (1..=5).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.operators.is_empty(), "sweep grid needs at least one operator");
        ensure!(!self.gk_values.is_empty(), "sweep grid needs at least one gk value");
        ensure!(!self.gt_values.is_empty(), "sweep grid needs at least one gt value");
        ensure!(!self.ta_values.is_empty(), "sweep grid needs at least one ta value");
        ensure!(!self.si_values.is_empty(), "sweep grid needs at least one si value");
        ensure!(all_distinct(&self.operators), "duplicate operator in sweep grid");
        ensure!(all_distinct(&self.gk_values), "duplicate gk value in sweep grid");
        ensure!(all_distinct(&self.gt_values), "duplicate gt value in sweep grid");
        ensure!(all_distinct(&self.ta_values), "duplicate ta value in sweep grid");
        ensure!(all_distinct(&self.si_values), "duplicate si value in sweep grid");
        for v in self.variants() {
            v.mode().validate()?;
            autoed_core::gradient::gaussian_kernel(v.gk)?;
        }
        Ok(())
    }

    pub fn variants_per_operator(&self) -> usize {
        self.gk_values.len() * self.gt_values.len() * self.ta_values.len() * self.si_values.len()
    }

    pub fn variant_count(&self) -> usize {
        self.operators.len() * self.variants_per_operator()
    }

    /// All combinations, operator-major, then gk, gt, ta, si.
    pub fn variants(&self) -> Vec<Variant> {
        let mut out = Vec::with_capacity(self.variant_count());
        for &operator in &self.operators {
            for &gk in &self.gk_values {
                for &grad_thr in &self.gt_values {
                    for &anchor_thr in &self.ta_values {
                        for &si in &self.si_values {
                            out.push(Variant {
                                operator,
                                gk,
                                grad_thr,
                                anchor_thr,
                                si,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

fn all_distinct<T: PartialEq>(values: &[T]) -> bool {
    values.iter().enumerate().all(|(i, v)| !values[..i].contains(v))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Variant {
    pub operator: Operator,
    pub gk: usize,
    pub grad_thr: f64,
    pub anchor_thr: f64,
    pub si: usize,
}

impl Variant {
    pub fn mode(&self) -> ThresholdMode {
        ThresholdMode::Manual {
            grad_thr: self.grad_thr,
            anchor_thr: self.anchor_thr,
            scan_interval: self.si,
        }
    }

    pub fn config(&self) -> RunConfig {
        RunConfig {
            operator: self.operator.name().to_string(),
            mode: "manual".into(),
            grad_thr: Some(self.grad_thr),
            anchor_thr: Some(self.anchor_thr),
            gk: Some(self.gk),
            si: Some(self.si),
        }
    }
}

/// Parses `3,5,7` or an inclusive range `start:end:step`.
pub fn parse_list(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    if let Some((start, rest)) = spec.split_once(':') {
        let (end, step) = rest.split_once(':').unwrap_or((rest, "1"));
        let (start, end, step): (f64, f64, f64) = (
            start.trim().parse().with_context(|| format!("bad range start in `{spec}`"))?,
            end.trim().parse().with_context(|| format!("bad range end in `{spec}`"))?,
            step.trim().parse().with_context(|| format!("bad range step in `{spec}`"))?,
        );
        ensure!(step > 0.0, "range step must be positive in `{spec}`");
        ensure!(end >= start, "range end before start in `{spec}`");
        let n = ((end - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|k| start + k as f64 * step).collect());
    }
    let values: Vec<f64> = spec
        .split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad value `{v}` in `{spec}`")))
        .collect::<Result<_>>()?;
    ensure!(!values.is_empty(), "empty list");
    Ok(values)
}

pub fn parse_int_list(spec: &str) -> Result<Vec<usize>> {
    parse_list(spec)?
        .into_iter()
        .map(|v| {
            if v.fract() != 0.0 || v < 0.0 {
                bail!("`{v}` is not a non-negative integer");
            }
            Ok(v as usize)
        })
        .collect()
}

pub fn parse_operators(spec: &str) -> Result<Vec<Operator>> {
    if spec.trim().eq_ignore_ascii_case("all") {
        return Ok(Operator::ALL.to_vec());
    }
    spec.split(',')
        .map(|s| s.parse::<Operator>().map_err(Into::into))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    /// One row per variant, best micro-F1 first.
    pub variants: Vec<VariantRow>,
    /// One row per (image, variant), in grid order.
    pub images: Vec<ImageRow>,
    /// Wall-clock per variant, in grid order.
    pub timings: Vec<TimingRow>,
}

/// Evaluates one threshold mode over prepared images; returns the per-image
/// rows and the pooled row.
pub fn evaluate_mode(
    config: &RunConfig,
    prepared: &[Prepared],
    pairs: &[LoadedPair],
    mode: &ThresholdMode,
    tolerance: usize,
) -> Result<(Vec<ImageRow>, VariantRow)> {
    let mut rows = Vec::with_capacity(pairs.len());
    let mut evals = Vec::with_capacity(pairs.len());
    for (prep, pair) in prepared.iter().zip(pairs) {
        let result = detect_prepared(prep, mode, 1)?;
        let eval = score(match_edge_maps(&result.edge_map, &pair.ground_truth, tolerance)?);
        rows.push(ImageRow::new(&pair.id, config, result.thresholds.as_ref(), &eval));
        evals.push(eval);
    }
    let agg = aggregate(&evals)?;
    Ok((rows, VariantRow::new(config, &agg)))
}

pub fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building worker pool")
}

pub fn run_sweep(
    pairs: &[LoadedPair],
    grid: &SweepGrid,
    tolerance: usize,
    magnitude: MagnitudeMode,
    jobs: usize,
) -> Result<SweepOutcome> {
    grid.validate()?;
    ensure!(!pairs.is_empty(), "empty dataset");
    let pool = thread_pool(jobs)?;
    pool.install(|| {
        // prepared[(op_index * gk_count + gk_index) * images + image]
        let combos: Vec<(Operator, usize, usize)> = grid
            .operators
            .iter()
            .flat_map(|&op| grid.gk_values.iter().map(move |&gk| (op, gk)))
            .flat_map(|(op, gk)| (0..pairs.len()).map(move |i| (op, gk, i)))
            .collect();
        let prepared: Vec<Prepared> = combos
            .par_iter()
            .map(|&(op, gk, i)| {
                prepare(&pairs[i].image, op, gk, magnitude)
                    .with_context(|| format!("preparing {} with {op}, gk={gk}", pairs[i].id))
            })
            .collect::<Result<_>>()?;
        let slot = |op_idx: usize, gk_idx: usize| -> &[Prepared] {
            let base = (op_idx * grid.gk_values.len() + gk_idx) * pairs.len();
            &prepared[base..base + pairs.len()]
        };

        let variants = grid.variants();
        let results: Vec<(Vec<ImageRow>, VariantRow, f64)> = variants
            .par_iter()
            .map(|v| {
                let op_idx = grid.operators.iter().position(|&o| o == v.operator).unwrap();
                let gk_idx = grid.gk_values.iter().position(|&g| g == v.gk).unwrap();
                let started = Instant::now();
                let (rows, summary) = evaluate_mode(&v.config(), slot(op_idx, gk_idx), pairs, &v.mode(), tolerance)?;
                Ok((rows, summary, started.elapsed().as_secs_f64() * 1e3))
            })
            .collect::<Result<_>>()?;

        let mut outcome = SweepOutcome {
            variants: Vec::with_capacity(results.len()),
            images: Vec::with_capacity(results.len() * pairs.len()),
            timings: Vec::with_capacity(results.len()),
        };
        for (rows, summary, ms) in results {
            outcome.timings.push(TimingRow {
                variant: summary.key(),
                wall_ms: ms,
            });
            outcome.images.extend(rows);
            outcome.variants.push(summary);
        }
        outcome.variants.sort_by(|a, b| b.f1.total_cmp(&a.f1));
        Ok(outcome)
    })
}
