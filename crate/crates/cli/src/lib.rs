//! Command-line front end: argument definitions, file formats and the
//! subcommand implementations behind the `trace-ratio` binary.

pub mod args;
pub mod commands;
pub mod io;
