//! Command-line front end: configuration, the batch pipeline and evaluation.

pub mod config;
pub mod error;
pub mod evaluate;
pub mod fsio;
pub mod pipeline;

pub use config::PipelineConfig;
pub use error::CliError;
