//! The exact SEIV jump process: per-node rates, Gillespie sample paths, the
//! master-equation oracle and Monte Carlo marginal estimates.

mod gillespie;
mod master;
mod monte_carlo;
mod rates;

pub use gillespie::{simulate_path, Event, EventTrajectory, ParamsSchedule, PathSimulator};
pub use master::{master_equation_marginals, MasterEquation, MAX_ORACLE_NODES};
pub use monte_carlo::{monte_carlo_marginals, MonteCarloMarginals};
pub use rates::{transition_rates, RateTable};

use std::io::Write;

use crate::model::MarginalVector;

/// Writes marginals as CSV with columns `time,node,p_S,p_E,p_I,p_V`.
pub fn write_marginals_csv<W: Write>(mut w: W, times: &[f64], marginals: &[MarginalVector]) -> std::io::Result<()> {
    writeln!(w, "time,node,p_S,p_E,p_I,p_V")?;
    for (t, m) in times.iter().zip(marginals) {
        for (i, row) in m.p.iter().enumerate() {
            writeln!(w, "{t},{i},{},{},{},{}", row[0], row[1], row[2], row[3])?;
        }
    }
    Ok(())
}
