//! Command-line surface of the simulator: strict JSON configs in, CSV tables
//! and JSON summaries out.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure or
//! non-converged result, 4 failed validation check.

pub mod commands;
pub mod config;
pub mod csv;

pub use commands::run_command;
pub use config::{parse_config, ConfigError, RunConfig};
pub use csv::{emit_csv, Cell, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;
