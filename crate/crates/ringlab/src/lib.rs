//! Configuration files, CSV tables and the `ringlab` command line on top of
//! [`ringlab_core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod range;
pub mod table;

pub use cli::run;
pub use config::{default_config, load_config, parse_config, ConfigError};
pub use error::{CliError, ErrorKind};
