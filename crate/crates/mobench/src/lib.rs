//! Dataset IO, the nine-benchmark registry, the experiment runner and result
//! emitters built on top of [`mobench_core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod io;
pub mod registry;
pub mod report;
pub mod runner;

pub use error::{Error, Result};
pub use mobench_core as core;

/// Environment variable naming the root directory of converted datasets.
pub const DATA_DIR_ENV: &str = "MOBENCH_DATA_DIR";
