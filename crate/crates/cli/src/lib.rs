//! Dataset-level driver for the edge detector: single-image detection,
//! batch evaluation, parameter sweeps and operator comparison tables.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod report;
pub mod sweep;

pub use commands::{cmd_compare, cmd_detect, cmd_eval, cmd_sweep};
pub use sweep::SweepGrid;
