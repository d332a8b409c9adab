//! Configuration, subcommands and report writers for the `engelgap` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod svg;

pub use commands::{
    cmd_calibrate, cmd_compare, cmd_solve, cmd_sweep_allocation, Allocation, RunOptions,
};
pub use config::RunConfig;
pub use error::CliError;
