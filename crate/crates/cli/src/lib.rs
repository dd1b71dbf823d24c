//! File formats, pipeline runs and SVG plots around `gem-core`.

pub mod config;
pub mod error;
pub mod generate;
pub mod io;
pub mod manifest;
pub mod pipeline;
pub mod plot;
pub mod svg;

pub use config::RunConfig;
pub use error::{CliError, Result};
