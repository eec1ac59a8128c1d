//! Config-driven experiment runner for `rpnv-core`: JSON config in, CSV
//! tables and a JSON summary out.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::Config;
pub use error::CliError;
pub use experiments::{run, Experiment};
pub use output::{Bundle, Table};

/// Worker pool capped at `jobs` threads (all cores when `None`).
pub fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Io(e.to_string()))
}
