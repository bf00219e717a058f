//! File formats, run manifests, parallel drivers and the command-line
//! front end for `augfid-core`.

pub mod cli;
pub mod drivers;
mod error;
pub mod format;
pub mod manifest;

pub use error::CliError;
