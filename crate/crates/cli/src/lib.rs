//! Experiment drivers behind the `fcgrasp` binary.

pub mod benchmark;
pub mod contact_gen;
pub mod correlate;
pub mod error;
pub mod inputs;
pub mod manifest;
pub mod stats;
pub mod synthesize;

pub use error::{CliError, CliResult};

/// A bounded pool; `threads == 0` lets rayon pick.
pub fn worker_pool(threads: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Input(format!("thread pool: {e}")))
}
