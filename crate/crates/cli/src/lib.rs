//! Experiment front end for the SEIV controller: scenario configuration and
//! the `simulate`, `bounds`, `control` and `verify` commands.

pub mod bounds;
pub mod config;
pub mod control;
pub mod error;
pub mod output;
pub mod simulate;
pub mod verify;

pub use config::{Scenario, ScenarioConfig};
pub use error::{CliError, CliResult};

/// Runs `f` on a thread pool of `workers` threads (0 for one per core).
pub(crate) fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Failed(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// `0, dt, 2 dt, ...` strictly before `horizon`.
pub(crate) fn sampling_grid(dt: f64, horizon: f64) -> Vec<f64> {
    (0..).map(|k| k as f64 * dt).take_while(|&t| t < horizon).collect()
}
