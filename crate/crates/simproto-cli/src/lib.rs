//! Library surface of the `simproto` command-line tool, exposed so that
//! integration tests can drive commands directly.

pub mod commands;
pub mod config;
