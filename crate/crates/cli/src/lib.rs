//! Library half of the `zeno-lab` binary: configuration, curve files and
//! the subcommands.

pub mod commands;
pub mod config;
pub mod curve;
pub mod error;
