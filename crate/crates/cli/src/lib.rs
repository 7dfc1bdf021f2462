//! Batch front end for the `levem` engines: scenario files, the seven
//! commands, and their CSV/SVG/JSON outputs.

pub mod commands;
pub mod config;
pub mod output;
pub mod scenario;
pub mod units;

pub use commands::{run, CliError, Command, Report, Suite};
pub use config::{ConfigError, Scenario};
pub use output::{Envelope, Format, Table};
