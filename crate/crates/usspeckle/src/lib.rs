//! File formats, multi-threaded filtering, benchmarking and the batch CLI
//! for [`usspeckle_core`].

pub mod bench;
pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod parallel;
pub mod report;

pub use error::CliError;
pub use io::{load_volume, save_volume, IoError};
pub use parallel::{despeckle, filter_obnlm, Implementation};
