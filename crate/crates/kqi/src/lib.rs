//! Dataset files, run configuration and the pipeline commands behind the
//! `kqi` binary.

pub mod artifacts;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod stages;
pub mod timing;

pub use config::{ConfigFile, RunConfig};
pub use error::{Error, Result};
