//! CSV rows and text reports.

use std::path::Path;

use anyhow::{Context, Result};
use autoed_core::edge_drawing::ResolvedThresholds;
use autoed_core::{DetectionParams, DetectionResult};
use autoed_core::evaluation::{Aggregate, EvalResult};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// One (image, configuration) evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageRow {
    pub image_id: String,
    pub operator: String,
    pub mode: String,
    pub grad_thr: Option<f64>,
    pub anchor_thr: Option<f64>,
    pub gk: Option<usize>,
    pub si: Option<usize>,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub t_otsu: Option<u8>,
}

impl ImageRow {
    pub fn new(image_id: &str, config: &RunConfig, thresholds: Option<&ResolvedThresholds>, eval: &EvalResult) -> Self {
        Self {
            image_id: image_id.to_string(),
            operator: config.operator.clone(),
            mode: config.mode.clone(),
            grad_thr: thresholds.map(|t| t.grad_thr),
            anchor_thr: thresholds.map(|t| t.anchor_thr),
            gk: config.gk,
            si: thresholds.map(|t| t.scan_interval).or(config.si),
            tp: eval.matched.tp,
            fp: eval.matched.fp,
            fn_: eval.matched.fn_,
            precision: eval.precision,
            recall: eval.recall,
            f1: eval.f1,
            t_otsu: thresholds.and_then(|t| t.t_otsu),
        }
    }
}

/// Labels shared by every row of one configuration.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub operator: String,
    pub mode: String,
    pub grad_thr: Option<f64>,
    pub anchor_thr: Option<f64>,
    pub gk: Option<usize>,
    pub si: Option<usize>,
}

/// Dataset-level result of one configuration, micro-averaged with the macro
/// averages alongside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantRow {
    pub operator: String,
    pub mode: String,
    pub grad_thr: Option<f64>,
    pub anchor_thr: Option<f64>,
    pub gk: Option<usize>,
    pub si: Option<usize>,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub images: usize,
}

impl VariantRow {
    pub fn new(config: &RunConfig, agg: &Aggregate) -> Self {
        Self {
            operator: config.operator.clone(),
            mode: config.mode.clone(),
            grad_thr: config.grad_thr,
            anchor_thr: config.anchor_thr,
            gk: config.gk,
            si: config.si,
            tp: agg.micro.matched.tp,
            fp: agg.micro.matched.fp,
            fn_: agg.micro.matched.fn_,
            precision: agg.micro.precision,
            recall: agg.micro.recall,
            f1: agg.micro.f1,
            macro_precision: agg.macro_precision,
            macro_recall: agg.macro_recall,
            macro_f1: agg.macro_f1,
            images: agg.images,
        }
    }

    pub fn key(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| v.to_string());
        format!(
            "{}/{}/gk={}/gt={}/ta={}/si={}",
            self.operator,
            self.mode,
            self.gk.map_or("-".into(), |v| v.to_string()),
            opt(self.grad_thr),
            opt(self.anchor_thr),
            self.si.map_or("-".into(), |v| v.to_string()),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub variant: String,
    pub wall_ms: f64,
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

pub fn summary_line(agg: &Aggregate) -> String {
    format!(
        "images={} tp={} fp={} fn={} precision={:.3} recall={:.3} f1={:.3} macro_precision={:.3} macro_recall={:.3} macro_f1={:.3}",
        agg.images,
        agg.micro.matched.tp,
        agg.micro.matched.fp,
        agg.micro.matched.fn_,
        agg.micro.precision,
        agg.micro.recall,
        agg.micro.f1,
        agg.macro_precision,
        agg.macro_recall,
        agg.macro_f1,
    )
}

/// Left-aligned first columns, right-aligned numbers, two-space gutters.
pub fn aligned_table(header: &[&str], rows: &[Vec<String>], numeric_from: usize) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let render = |cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| {
                if i >= numeric_from {
                    format!("{c:>w$}")
                } else {
                    format!("{c:<w$}")
                }
            })
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = render(header.to_vec());
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in rows {
        out.push_str(&render(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

/// `key=value` lines describing one detection run.
pub fn detect_report(image: &Path, params: &DetectionParams, result: &DetectionResult) -> String {
    let mut lines = vec![
        format!("image={}", image.display()),
        format!("operator={}", params.operator),
        format!("mode={}", params.mode.name()),
        format!("gk={}", params.gaussian_size),
        format!("magnitude={}", params.magnitude.name()),
    ];
    match &result.thresholds {
        Some(t) => {
            if let Some(otsu) = t.t_otsu {
                lines.push(format!("t_otsu={otsu}"));
            }
            lines.push(format!("grad_thr={}", t.grad_thr));
            lines.push(format!("anchor_thr={}", t.anchor_thr));
            lines.push(format!("si={}", t.scan_interval));
        }
        None => lines.push("t_otsu=none".into()),
    }
    lines.push(format!("anchors={}", result.anchor_count));
    lines.push(format!("segments={}", result.segments.len()));
    lines.push(format!("edge_pixels={}", result.edge_map.count()));
    if let Some(d) = &result.diagnostic {
        lines.push(format!("diagnostic={d}"));
    }
    let mut out = lines.join("\n");
    out.push('\n');
    out
}
