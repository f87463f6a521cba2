//! Edge Drawing (ED) edge-segment detection with automatic, Otsu-derived
//! thresholds.
//!
//! The pipeline is: grayscale image → Gaussian smoothing → gradient field
//! (any of eight 3×3 first-order operators) → weak-pixel suppression →
//! anchor extraction → smart routing into edge segments. Thresholds are
//! either supplied by hand or derived per image from the Otsu threshold
//! of the smoothed image.
//!
//! [`evaluation`] scores binary edge maps against ground truth with a
//! tolerance-based one-to-one pixel matcher.

pub mod edge_drawing;
pub mod error;
pub mod evaluation;
pub mod gradient;
pub mod image;
pub mod threshold;

pub use edge_drawing::{
    detect_edges, DetectionParams, DetectionResult, EdgeMap, EdgeSegment, ThresholdMode,
};
pub use error::{Error, Result};
pub use evaluation::{aggregate, match_edge_maps, score, Aggregate, EvalResult, MatchResult};
pub use gradient::{gradient_field, kernel_for, GradientField, Kernel3x3, MagnitudeMode, Operator};
pub use image::{GrayImage, Raster, RgbImage};
pub use threshold::{derive_ed_thresholds, histogram, otsu_threshold, AutoThresholds};
