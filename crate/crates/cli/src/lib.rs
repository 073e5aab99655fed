//! Config-driven batch front end for `plap-core`.

pub mod config;
pub mod error;
pub mod render;
pub mod run;

pub use config::{parse_config, parse_config_for, Format, RunConfig, Subcommand};
pub use error::CliError;
pub use render::format_number;
pub use run::{run, Outcome};
