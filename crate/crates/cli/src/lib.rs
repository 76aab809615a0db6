//! Command-line front end: configuration, subcommands, CSV and snapshot
//! output, and parameter sweeps.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod report;
