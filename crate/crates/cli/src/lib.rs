//! Experiment runner around `besovlab-core`: config files, Monte-Carlo
//! orchestration, binary/CSV/JSON persistence and plot-script emission.
//!
//! Experiments are fully deterministic: per-path seeds derive from the base
//! seed and the path index through the counter-based generator, workers pick
//! paths by congruence class, and aggregation folds results in path order —
//! outputs are byte-identical regardless of the worker count.

pub mod config;
pub mod experiments;
pub mod io;
pub mod manifest;

pub use experiments::{run_experiment, Experiment, ExperimentKind};

/// Format a float with 17 significant digits ('.' decimal separator), enough
/// for bit-exact re-parsing.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
