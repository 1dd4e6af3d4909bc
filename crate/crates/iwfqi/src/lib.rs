//! Experiment harness for importance weighted fitted Q-iteration: presets,
//! configuration, file formats, the multi-seed experiment loop and charts.

pub mod config;
pub mod harness;
pub mod io;
pub mod presets;
pub mod svg;

pub use config::ExperimentConfig;
pub use harness::{Experiment, ExperimentResult};
