//! File formats, configuration, the experiment loop and the command-line
//! driver around `vanet-core`.

pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod output;
pub mod summary;
pub mod trace;

pub use config::{Algorithm, ExperimentConfig};
pub use error::{SimError, TraceError};
