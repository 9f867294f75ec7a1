//! Command line front end: rule files, property suites and subcommands.

pub mod commands;
pub mod rulefile;
pub mod verify;

pub use commands::run;
