//! Command-line pipeline around `ganc-core`: rating file parsing, on-disk
//! artifacts with content-hash chaining, a rayon executor for the per-user
//! phases and the `ganc` subcommands.

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod error;
pub mod exec;
pub mod io;
pub mod pipeline;

pub use error::{Error, Result};
