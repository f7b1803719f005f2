//! Batch front end of the `spinboson` simulator: configuration files,
//! experiment commands, CSV output and run records.

pub mod commands;
pub mod error;
pub mod load;
pub mod output;
pub mod record;
