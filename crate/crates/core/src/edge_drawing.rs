//! The Edge Drawing pipeline: weak-pixel suppression, anchor extraction and
//! smart routing of anchors into chained edge segments.
//!
//! The anchor test and the routing rules follow the original ED description:
//!
//! * A pixel is an anchor when its magnitude beats both neighbours across
//!   the edge by at least the anchor threshold (left/right for a vertical
//!   edge, up/down for a horizontal one).
//! * Routing walks from an anchor in both directions along the edge. Each
//!   step moves to the strongest of the three cells ahead (straight ahead
//!   wins ties). When the current pixel's orientation disagrees with the
//!   walk axis the walk turns onto the other axis. The walk stops at a
//!   suppressed (zero) cell, an already claimed cell or the image border.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gradient::{gaussian_kernel, gradient_field, smooth, GradientField, MagnitudeMode, Operator, Orientation};
use crate::image::GrayImage;
use crate::threshold::{derive_ed_thresholds_with, histogram, magnitude_histogram, otsu_threshold, ThresholdRatios};

pub const MAX_SCAN_INTERVAL: usize = 16;

pub type Point = (usize, usize);

/// Which image Otsu runs on in auto mode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OtsuSource {
    /// The smoothed grayscale image.
    #[default]
    Smoothed,
    /// Gradient magnitudes, rounded and clamped to `0..=255`.
    Magnitude,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AutoOptions {
    pub ratios: ThresholdRatios,
    pub source: OtsuSource,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThresholdMode {
    Manual {
        grad_thr: f64,
        anchor_thr: f64,
        scan_interval: usize,
    },
    /// Thresholds derived per image from Otsu; scan interval is always 1.
    Auto(AutoOptions),
}

impl ThresholdMode {
    pub fn name(&self) -> &'static str {
        match self {
            ThresholdMode::Manual { .. } => "manual",
            ThresholdMode::Auto(_) => "auto",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ThresholdMode::Manual {
                grad_thr,
                anchor_thr,
                scan_interval,
            } => {
                if !grad_thr.is_finite() || grad_thr <= 0.0 {
                    return Err(Error::InvalidParams(format!("grad_thr must be > 0, got {grad_thr}")));
                }
                if !anchor_thr.is_finite() || anchor_thr < 0.0 {
                    return Err(Error::InvalidParams(format!(
                        "anchor_thr must be >= 0, got {anchor_thr}"
                    )));
                }
                if !(1..=MAX_SCAN_INTERVAL).contains(&scan_interval) {
                    return Err(Error::InvalidParams(format!(
                        "scan_interval must be in 1..={MAX_SCAN_INTERVAL}, got {scan_interval}"
                    )));
                }
                Ok(())
            }
            ThresholdMode::Auto(opts) => {
                let ThresholdRatios { grad, anchor } = opts.ratios;
                if !(grad >= 0.0 && anchor >= 0.0) {
                    return Err(Error::InvalidParams("threshold ratios must be >= 0".into()));
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectionParams {
    pub operator: Operator,
    pub gaussian_size: usize,
    pub mode: ThresholdMode,
    pub magnitude: MagnitudeMode,
    pub min_segment_length: usize,
}

impl DetectionParams {
    pub fn manual(operator: Operator, gaussian_size: usize, grad_thr: f64, anchor_thr: f64, scan_interval: usize) -> Self {
        Self {
            operator,
            gaussian_size,
            mode: ThresholdMode::Manual {
                grad_thr,
                anchor_thr,
                scan_interval,
            },
            magnitude: MagnitudeMode::Approx,
            min_segment_length: 1,
        }
    }

    pub fn auto(operator: Operator, gaussian_size: usize) -> Self {
        Self {
            operator,
            gaussian_size,
            mode: ThresholdMode::Auto(AutoOptions::default()),
            magnitude: MagnitudeMode::Approx,
            min_segment_length: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        gaussian_kernel(self.gaussian_size)?;
        if self.min_segment_length == 0 {
            return Err(Error::InvalidParams("min_segment_length must be >= 1".into()));
        }
        self.mode.validate()
    }
}

/// Thresholds a detection run actually used.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolvedThresholds {
    pub grad_thr: f64,
    pub anchor_thr: f64,
    pub scan_interval: usize,
    /// Set in auto mode.
    pub t_otsu: Option<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    /// Auto mode could not split the histogram; nothing was detected.
    DegenerateHistogram,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::DegenerateHistogram => f.write_str("degenerate histogram: no edges detected"),
        }
    }
}

/// An ordered chain of 8-connected pixels.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgeSegment {
    pub pixels: Vec<Point>,
}

impl EdgeSegment {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// True when every pair of consecutive pixels is 8-adjacent.
    pub fn is_connected(&self) -> bool {
        self.pixels
            .windows(2)
            .all(|w| chebyshev(w[0], w[1]) == 1)
    }
}

#[inline]
pub fn chebyshev(a: Point, b: Point) -> usize {
    a.0.abs_diff(b.0).max(a.1.abs_diff(b.1))
}

/// One segment per line, pixels as `x,y` separated by spaces.
pub fn segments_to_text(segments: &[EdgeSegment]) -> String {
    let mut out = String::new();
    for seg in segments {
        let line: Vec<String> = seg.pixels.iter().map(|(x, y)| format!("{x},{y}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn segments_from_text(text: &str) -> Result<Vec<EdgeSegment>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            line.split_whitespace()
                .map(|pair| {
                    let (x, y) = pair
                        .split_once(',')
                        .ok_or_else(|| Error::InvalidParams(format!("bad coordinate `{pair}`")))?;
                    let parse = |s: &str| {
                        s.parse::<usize>()
                            .map_err(|_| Error::InvalidParams(format!("bad coordinate `{pair}`")))
                    };
                    Ok((parse(x)?, parse(y)?))
                })
                .collect::<Result<Vec<_>>>()
                .map(|pixels| EdgeSegment { pixels })
        })
        .collect()
}

/// Binary edge raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl EdgeMap {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            mask: vec![false; width * height],
        }
    }

    pub fn from_mask(width: usize, height: usize, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} mask cells for a {width}x{height} map",
                mask.len()
            )));
        }
        Ok(Self { width, height, mask })
    }

    pub fn from_points(width: usize, height: usize, points: impl IntoIterator<Item = Point>) -> Self {
        let mut map = Self::empty(width, height);
        for p in points {
            map.set(p, true);
        }
        map
    }

    pub fn from_segments(width: usize, height: usize, segments: &[EdgeSegment]) -> Self {
        Self::from_points(width, height, segments.iter().flat_map(|s| s.pixels.iter().copied()))
    }

    /// Nonzero pixels are edges.
    pub fn from_gray(img: &GrayImage) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            mask: img.pixels().iter().map(|&v| v != 0).collect(),
        }
    }

    /// Edges as 255 on a 0 background.
    pub fn to_gray(&self) -> GrayImage {
        let px = self.mask.iter().map(|&e| if e { 255 } else { 0 }).collect();
        GrayImage::new(self.width, self.height, px).expect("edge map dimensions are valid")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn get(&self, (x, y): Point) -> bool {
        self.mask[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, (x, y): Point, v: bool) {
        self.mask[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&e| e).count()
    }

    /// Edge pixels in row-major order.
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        let w = self.width;
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &e)| e)
            .map(move |(i, _)| (i % w, i / w))
    }
}

/// Zeroes magnitudes below `grad_thr`; orientation is kept.
pub fn suppress_weak(g: &GradientField, grad_thr: f64) -> GradientField {
    let mut out = g.clone();
    for m in out.magnitudes_mut() {
        if *m < grad_thr {
            *m = 0.0;
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnchorList {
    /// Row-major order.
    pub anchors: Vec<Point>,
}

fn on_scan_grid((x, y): Point, scan_interval: usize) -> bool {
    y % scan_interval == 0 || x % scan_interval == 0
}

pub fn is_anchor(g: &GradientField, (x, y): Point, anchor_thr: f64) -> bool {
    let m = g.magnitude(x, y);
    if m <= 0.0 {
        return false;
    }
    let (w, h) = (g.width(), g.height());
    let (a, b) = match g.orientation(x, y) {
        Orientation::Vertical => (
            g.magnitude(x.saturating_sub(1), y),
            g.magnitude((x + 1).min(w - 1), y),
        ),
        Orientation::Horizontal => (
            g.magnitude(x, y.saturating_sub(1)),
            g.magnitude(x, (y + 1).min(h - 1)),
        ),
    };
    m - a >= anchor_thr && m - b >= anchor_thr
}

/// Tests rows `0, si, 2·si, …` and columns `0, si, 2·si, …`; with `si = 1`
/// that is every pixel.
pub fn extract_anchors(g: &GradientField, anchor_thr: f64, scan_interval: usize) -> AnchorList {
    let si = scan_interval.max(1);
    let mut anchors = Vec::new();
    for y in 0..g.height() {
        for x in 0..g.width() {
            if on_scan_grid((x, y), si) && is_anchor(g, (x, y), anchor_thr) {
                anchors.push((x, y));
            }
        }
    }
    AnchorList { anchors }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Heading {
    Up,
    Down,
    Left,
    Right,
}

impl Heading {
    fn is_vertical(self) -> bool {
        matches!(self, Heading::Up | Heading::Down)
    }

    /// Straight-ahead offset followed by the two diagonals.
    fn candidates(self) -> [(isize, isize); 3] {
        match self {
            Heading::Up => [(0, -1), (-1, -1), (1, -1)],
            Heading::Down => [(0, 1), (-1, 1), (1, 1)],
            Heading::Left => [(-1, 0), (-1, -1), (-1, 1)],
            Heading::Right => [(1, 0), (1, -1), (1, 1)],
        }
    }
}

struct Router<'a> {
    field: &'a GradientField,
    claimed: &'a mut EdgeMap,
}

impl Router<'_> {
    fn offset(&self, (x, y): Point, (dx, dy): (isize, isize)) -> Option<Point> {
        let nx = x.checked_add_signed(dx)?;
        let ny = y.checked_add_signed(dy)?;
        (nx < self.field.width() && ny < self.field.height()).then_some((nx, ny))
    }

    /// Strongest in-bounds cell ahead; straight ahead wins ties.
    fn next_cell(&self, p: Point, heading: Heading) -> Option<Point> {
        let mut best: Option<(Point, f64)> = None;
        for d in heading.candidates() {
            if let Some(q) = self.offset(p, d) {
                let m = self.field.magnitude(q.0, q.1);
                if best.is_none_or(|(_, bm)| m > bm) {
                    best = Some((q, m));
                }
            }
        }
        best.map(|(q, _)| q)
    }

    /// Usable magnitude of the cell the walk would take next, 0 if blocked.
    fn prospect(&self, p: Point, heading: Heading) -> f64 {
        match self.next_cell(p, heading) {
            Some(q) if !self.claimed.get(q) => self.field.magnitude(q.0, q.1),
            _ => 0.0,
        }
    }

    /// Turns onto the other axis. The side of the last diagonal step is
    /// kept; otherwise the side with the stronger next cell wins.
    fn turn(&self, p: Point, heading: Heading, last_step: (isize, isize)) -> Heading {
        let (neg, pos, component) = if heading.is_vertical() {
            (Heading::Left, Heading::Right, last_step.0)
        } else {
            (Heading::Up, Heading::Down, last_step.1)
        };
        match component.signum() {
            -1 => neg,
            1 => pos,
            _ if self.prospect(p, pos) > self.prospect(p, neg) => pos,
            _ => neg,
        }
    }

    fn walk(&mut self, start: Point, mut heading: Heading) -> Vec<Point> {
        let mut path = Vec::new();
        let mut cur = start;
        let mut last_step = (0, 0);
        loop {
            let axis_vertical = self.field.orientation(cur.0, cur.1) == Orientation::Vertical;
            if axis_vertical != heading.is_vertical() {
                heading = self.turn(cur, heading, last_step);
            }
            let Some(next) = self.next_cell(cur, heading) else {
                break;
            };
            if self.field.magnitude(next.0, next.1) <= 0.0 || self.claimed.get(next) {
                break;
            }
            self.claimed.set(next, true);
            path.push(next);
            last_step = (
                next.0 as isize - cur.0 as isize,
                next.1 as isize - cur.1 as isize,
            );
            cur = next;
        }
        path
    }
}

/// Routes one segment through `anchor`, claiming every traversed pixel in
/// `claimed`. The result runs from the end of the second pass, through the
/// anchor, to the end of the first pass.
pub fn route_from_anchor(g: &GradientField, anchor: Point, claimed: &mut EdgeMap) -> EdgeSegment {
    claimed.set(anchor, true);
    let (first, second) = match g.orientation(anchor.0, anchor.1) {
        Orientation::Vertical => (Heading::Up, Heading::Down),
        Orientation::Horizontal => (Heading::Left, Heading::Right),
    };
    let mut router = Router { field: g, claimed };
    let forward = router.walk(anchor, first);
    let backward = router.walk(anchor, second);
    let mut pixels = Vec::with_capacity(forward.len() + backward.len() + 1);
    pixels.extend(backward.into_iter().rev());
    pixels.push(anchor);
    pixels.extend(forward);
    EdgeSegment { pixels }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectionResult {
    pub edge_map: EdgeMap,
    pub segments: Vec<EdgeSegment>,
    pub anchor_count: usize,
    /// `None` only when auto mode hit a degenerate histogram.
    pub thresholds: Option<ResolvedThresholds>,
    pub diagnostic: Option<Diagnostic>,
}

/// Smoothed image and gradient field for one (image, operator, kernel size)
/// combination; reusable across threshold settings.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub smoothed: GrayImage,
    pub field: GradientField,
}

pub fn prepare(img: &GrayImage, operator: Operator, gaussian_size: usize, magnitude: MagnitudeMode) -> Result<Prepared> {
    img.ensure_at_least(3)?;
    let kernel = gaussian_kernel(gaussian_size)?;
    let smoothed = smooth(img, &kernel)?;
    let field = gradient_field(&smoothed, operator, magnitude)?;
    Ok(Prepared { smoothed, field })
}

pub fn resolve_thresholds(prepared: &Prepared, mode: &ThresholdMode) -> Result<Option<ResolvedThresholds>> {
    mode.validate()?;
    match *mode {
        ThresholdMode::Manual {
            grad_thr,
            anchor_thr,
            scan_interval,
        } => Ok(Some(ResolvedThresholds {
            grad_thr,
            anchor_thr,
            scan_interval,
            t_otsu: None,
        })),
        ThresholdMode::Auto(opts) => {
            let hist = match opts.source {
                OtsuSource::Smoothed => histogram(&prepared.smoothed),
                OtsuSource::Magnitude => magnitude_histogram(&prepared.field),
            };
            match otsu_threshold(&hist) {
                Ok(otsu) => {
                    let auto = derive_ed_thresholds_with(otsu.threshold as i64, opts.ratios)?;
                    Ok(Some(ResolvedThresholds {
                        grad_thr: auto.grad_thr,
                        anchor_thr: auto.anchor_thr,
                        scan_interval: 1,
                        t_otsu: Some(auto.t_otsu),
                    }))
                }
                Err(Error::DegenerateHistogram) => Ok(None),
                Err(e) => Err(e),
            }
        }
    }
}

/// Runs suppression, anchoring and routing on an already prepared field.
pub fn detect_prepared(prepared: &Prepared, mode: &ThresholdMode, min_segment_length: usize) -> Result<DetectionResult> {
    let (w, h) = (prepared.field.width(), prepared.field.height());
    let Some(thresholds) = resolve_thresholds(prepared, mode)? else {
        return Ok(DetectionResult {
            edge_map: EdgeMap::empty(w, h),
            segments: Vec::new(),
            anchor_count: 0,
            thresholds: None,
            diagnostic: Some(Diagnostic::DegenerateHistogram),
        });
    };
    let field = suppress_weak(&prepared.field, thresholds.grad_thr);
    let mut anchors = extract_anchors(&field, thresholds.anchor_thr, thresholds.scan_interval).anchors;
    // Stable: equal magnitudes stay in row-major order.
    anchors.sort_by(|&a, &b| field.magnitude(b.0, b.1).total_cmp(&field.magnitude(a.0, a.1)));

    let mut claimed = EdgeMap::empty(w, h);
    let mut segments = Vec::new();
    for &anchor in &anchors {
        if claimed.get(anchor) {
            continue;
        }
        let seg = route_from_anchor(&field, anchor, &mut claimed);
        if seg.len() >= min_segment_length.max(1) {
            segments.push(seg);
        }
    }
    Ok(DetectionResult {
        edge_map: EdgeMap::from_segments(w, h, &segments),
        segments,
        anchor_count: anchors.len(),
        thresholds: Some(thresholds),
        diagnostic: None,
    })
}

/// Full pipeline: smooth → gradient → (auto: Otsu thresholds) → suppress →
/// anchors → routing.
pub fn detect_edges(img: &GrayImage, params: &DetectionParams) -> Result<DetectionResult> {
    params.validate()?;
    let prepared = prepare(img, params.operator, params.gaussian_size, params.magnitude)?;
    detect_prepared(&prepared, &params.mode, params.min_segment_length)
}

impl FromStr for OtsuSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "smoothed" | "image" => Ok(OtsuSource::Smoothed),
            "magnitude" | "gradient" => Ok(OtsuSource::Magnitude),
            _ => Err(Error::InvalidParams(format!(
                "otsu source must be `smoothed` or `magnitude`, got `{s}`"
            ))),
        }
    }
}
