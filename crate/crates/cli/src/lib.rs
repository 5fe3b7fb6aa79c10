//! Configuration, bitstream files and experiment runners behind the
//! `robust-beta` binary.

pub mod bitfile;
pub mod config;
pub mod experiments;

pub use bitfile::{BitFile, BitFileError};
pub use config::{ConfigError, ExperimentConfig, ExperimentKind, Options};
pub use experiments::{run_experiment, ExperimentOutput};
