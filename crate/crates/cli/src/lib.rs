//! Experiment harness around the naming-game simulator: spec files, named
//! presets, sweep scheduling with per-run seeds, CSV results and summary
//! statistics.

pub mod presets;
pub mod spec;
pub mod summarize;
pub mod sweep;

pub use presets::{preset, PRESET_NAMES};
pub use spec::{parse_spec, parse_spec_str, Axis, ExperimentSpec, SpecError};
pub use summarize::{summarize_file, SUMMARY_HEADER};
pub use sweep::{run_sweep, SweepOutput, RESULTS_HEADER};
