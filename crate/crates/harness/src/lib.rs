//! Configurable experiment runner for the precession model: parameter
//! sweeps, feedback dynamics with spectra, and randomized property suites.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod registry;

pub use config::Config;
pub use error::HarnessError;
pub use output::{write_bundle, ResultBundle, RunInfo, Table};
pub use registry::{Experiment, ExperimentRegistry, RunContext};
