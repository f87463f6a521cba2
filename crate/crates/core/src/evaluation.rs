//! Tolerance-matched comparison of a predicted edge map with ground truth.
//!
//! Matching is a greedy one-to-one assignment: candidate pairs within the
//! Chebyshev tolerance are taken in ascending distance, ties broken by the
//! row-major index of the predicted pixel and then of the ground-truth
//! pixel. Each pixel is matched at most once.

use crate::edge_drawing::{EdgeMap, Point};
use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: usize = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MatchResult {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tolerance: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EvalResult {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: MatchResult,
}

/// Visits the cells at Chebyshev distance exactly `d` from `(cx, cy)` in
/// row-major order, skipping those outside `w × h`.
fn ring(cx: usize, cy: usize, d: usize, w: usize, h: usize, mut visit: impl FnMut(Point) -> bool) {
    let (cx, cy, d) = (cx as isize, cy as isize, d as isize);
    for y in (cy - d).max(0)..=(cy + d).min(h as isize - 1) {
        let full_row = (y - cy).abs() == d;
        let x0 = cx - d;
        let x1 = cx + d;
        if full_row {
            for x in x0.max(0)..=x1.min(w as isize - 1) {
                if visit((x as usize, y as usize)) {
                    return;
                }
            }
        } else {
            for x in [x0, x1] {
                if x >= 0 && x < w as isize && visit((x as usize, y as usize)) {
                    return;
                }
            }
        }
    }
}

pub fn match_edge_maps(pred: &EdgeMap, gt: &EdgeMap, tolerance: usize) -> Result<MatchResult> {
    if (pred.width(), pred.height()) != (gt.width(), gt.height()) {
        return Err(Error::DimensionMismatch {
            left_width: pred.width(),
            left_height: pred.height(),
            right_width: gt.width(),
            right_height: gt.height(),
        });
    }
    let (w, h) = (gt.width(), gt.height());
    let mut gt_free = gt.clone();
    let mut pending: Vec<Point> = pred.points().collect();
    let total_pred = pending.len() as u64;
    let total_gt = gt.count() as u64;
    let mut tp = 0u64;

    for d in 0..=tolerance {
        pending.retain(|&(px, py)| {
            let mut hit = None;
            ring(px, py, d, w, h, |g| {
                if gt_free.get(g) {
                    hit = Some(g);
                    true
                } else {
                    false
                }
            });
            match hit {
                Some(g) => {
                    gt_free.set(g, false);
                    tp += 1;
                    false
                }
                None => true,
            }
        });
        if pending.is_empty() {
            break;
        }
    }
    Ok(MatchResult {
        tp,
        fp: total_pred - tp,
        fn_: total_gt - tp,
        tolerance,
    })
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1; any empty denominator scores 0.
pub fn score(m: MatchResult) -> EvalResult {
    EvalResult {
        precision: ratio(m.tp, m.tp + m.fp),
        recall: ratio(m.tp, m.tp + m.fn_),
        f1: ratio(2 * m.tp, 2 * m.tp + m.fp + m.fn_),
        matched: m,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aggregate {
    /// Scores of the pooled counts.
    pub micro: EvalResult,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub images: usize,
}

pub fn aggregate(results: &[EvalResult]) -> Result<Aggregate> {
    if results.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut pooled = MatchResult {
        tolerance: results[0].matched.tolerance,
        ..Default::default()
    };
    for r in results {
        pooled.tp += r.matched.tp;
        pooled.fp += r.matched.fp;
        pooled.fn_ += r.matched.fn_;
    }
    let n = results.len() as f64;
    let mean = |f: fn(&EvalResult) -> f64| results.iter().map(f).sum::<f64>() / n;
    Ok(Aggregate {
        micro: score(pooled),
        macro_precision: mean(|r| r.precision),
        macro_recall: mean(|r| r.recall),
        macro_f1: mean(|r| r.f1),
        images: results.len(),
    })
}
