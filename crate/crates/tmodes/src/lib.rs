//! Command-line front end of the two-mode telegraph-noise model: run
//! configuration, CSV output, parallel ensembles and the verification suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod config;
pub mod dump;
mod error;
pub mod parallel;
pub mod table;
pub mod verify;

pub use error::{AppError, AppResult};
pub use tmodes_core as core;
