//! Configuration-driven runs of the `dyspec-core` estimators with JSON/CSV
//! output.
//!
//! A run resolves the flow and ensemble from a [`RunConfig`], estimates the
//! requested spectra in parallel, and writes one file per result. Trajectory
//! work is distributed with rayon, but every reduction follows ensemble
//! order, so output bytes do not depend on the thread count.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
mod pipeline;

pub use config::RunConfig;
pub use error::CliError;
pub use pipeline::{run, RunOptions, RunSummary};
