//! Pipeline driver for the age-friendliness index. Each command reads a
//! project config and upstream stage outputs and writes one stage directory.

pub mod commands;
pub mod config;
pub mod error;
pub mod meta;

pub use config::Project;
pub use error::{CliError, Result};
