//! Command-line front end for `dhym-core`: input documents, report writers and
//! one module per subcommand.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use error::CliError;

/// Sizes the global rayon pool from `DHYM_THREADS`, if set.
pub fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("DHYM_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| CliError::Parse(format!("DHYM_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(CliError::Parse("DHYM_THREADS must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(())
}
