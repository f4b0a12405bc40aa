//! Command-line layer: config parsing, run execution, presets and verification suites.

pub mod config;
pub mod presets;
pub mod run;
pub mod verify;

pub use config::{RunConfig, SystemKind};
pub use run::{run_config, run_config_file, RunSummary};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "LPL_WORKERS";

/// Worker count from `LPL_WORKERS`; `None` when unset or empty.
pub fn workers_from_env() -> crate::Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(crate::Error::Config { field: WORKERS_ENV.into(), message: format!("expected a positive integer, got {v:?}") }),
        },
        Err(_) => Ok(None),
    }
}
