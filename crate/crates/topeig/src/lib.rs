//! Configuration, file formats, the replicate-parallel runner and the
//! command layer behind the `topeig` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod runner;

pub use commands::{run, Command, Invocation, Outcome};
pub use config::Config;
pub use error::{AppError, Result};
