//! Config files, CSV output, parameter sweeps and the invariant suite on top
//! of `catbeam-core`.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod commands;
pub mod config;
pub mod output;

pub use commands::CliError;
pub use config::{parse_config, ConfigError, RawConfig, RunConfig};
