//! The `pharmwatch` command line: configuration, subcommands and run
//! manifests.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use app::run;
pub use config::Config;
pub use error::CliError;
