//! Experiment pipeline behind the `wrse` command line: dataset files, model
//! archives, reports and the worker pool.

// `!(a < b)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod archive;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod parallel;
pub mod pipeline;
pub mod report;

pub use config::{Experiment, Overrides};
pub use error::{CliError, CliResult};
