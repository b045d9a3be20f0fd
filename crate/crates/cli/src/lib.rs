//! Batch front-end for the `instantform` library: strict TOML configs,
//! deterministic CSV/JSON artifacts and a reproducibility manifest.

pub mod config;
pub mod run;

pub use config::{parse_config, Command, ParseError, RunConfig};
pub use run::{execute, RunError};
