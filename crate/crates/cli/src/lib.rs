//! Command-line front end: problem files, report formatting and subcommands.

pub mod commands;
pub mod problem_file;
pub mod report;
