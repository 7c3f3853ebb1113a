//! Experiment driver for the `spfilter` structure-preserving filter.
//!
//! Each subcommand reproduces one numerical study and writes CSV tables,
//! legacy VTK snapshots and a re-runnable `manifest.txt`.

#![allow(clippy::type_complexity, clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod experiments;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] spfilter::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
