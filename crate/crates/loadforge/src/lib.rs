//! File formats, dataset emission and the `loadforge` command line, on top
//! of `loadforge-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod shed;

pub use error::{CliError, Result};
