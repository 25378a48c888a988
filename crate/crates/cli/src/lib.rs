//! Command-line front end for curved Hu-Zhang elasticity runs.

pub mod config;
pub mod run;

pub use config::{parse_config, Command, CommandKind, Flags, RunConfig, Targets};
pub use run::{run, RunOutcome};
