use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use seiv_core::rng::{stream, Purpose};
use seiv_core::stochastic::{simulate_path, EventTrajectory, ParamsSchedule};

use crate::config::ScenarioConfig;
use crate::error::CliResult;
use crate::output::OutputDir;
use crate::{in_pool, sampling_grid};

#[derive(Clone, Debug, Serialize)]
pub struct SimulateSummary {
    pub trials: usize,
    pub horizon: f64,
    pub ell0: usize,
    pub eliminated: usize,
    /// Mean over the eliminated runs only.
    pub mean_elimination_time: Option<f64>,
    pub mean_events: f64,
}

/// Uncontrolled runs under the base parameters, one stream per trial.
pub fn run_simulate(cfg: &ScenarioConfig) -> CliResult<Vec<EventTrajectory>> {
    cfg.validate_trials()?;
    let sc = cfg.build()?;
    let schedule = ParamsSchedule::constant(sc.params.clone());
    let root = cfg.root_seed();
    let horizon = cfg.simulate.horizon;
    in_pool(cfg.workers, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(root, Purpose::Simulation, i as u64);
                simulate_path(&sc.graph, &schedule, &sc.x0, horizon, &mut rng)
            })
            .collect::<seiv_core::Result<Vec<_>>>()
    })?
    .map_err(Into::into)
}

pub fn cmd_simulate(cfg: &ScenarioConfig, out: &Path) -> CliResult<SimulateSummary> {
    let runs = run_simulate(cfg)?;
    let out = OutputDir::create(out)?;
    let horizon = cfg.simulate.horizon;

    out.write_with("trajectories.csv", |w| {
        writeln!(w, "trial,time,node,from,to")?;
        for (k, run) in runs.iter().enumerate() {
            for ev in &run.events {
                writeln!(w, "{k},{},{},{},{}", ev.time, ev.node, ev.from.symbol(), ev.to.symbol())?;
            }
        }
        Ok(())
    })?;
    out.write_with("initial_state.txt", |w| writeln!(w, "{}", runs[0].initial))?;

    let grid = sampling_grid(cfg.controller.dt, horizon);
    let ells: Vec<Vec<usize>> =
        runs.iter().map(|r| r.states_at(&grid).iter().map(|s| s.exposed_infected_count()).collect()).collect();
    out.write_with("ell.csv", |w| {
        writeln!(w, "time,mean_ell,fraction_infected_runs")?;
        for (k, t) in grid.iter().enumerate() {
            let m = runs.len() as f64;
            let mean = ells.iter().map(|e| e[k] as f64).sum::<f64>() / m;
            let alive = ells.iter().filter(|e| e[k] > 0).count() as f64 / m;
            writeln!(w, "{t},{mean},{alive}")?;
        }
        Ok(())
    })?;

    let elim: Vec<f64> = runs.iter().filter_map(|r| r.elimination_time()).collect();
    let summary = SimulateSummary {
        trials: runs.len(),
        horizon,
        ell0: runs[0].initial.exposed_infected_count(),
        eliminated: elim.len(),
        mean_elimination_time: (!elim.is_empty()).then(|| elim.iter().sum::<f64>() / elim.len() as f64),
        mean_events: runs.iter().map(|r| r.events.len() as f64).sum::<f64>() / runs.len() as f64,
    };
    out.write_json("summary.json", &summary)?;
    out.write_metadata("simulate", cfg)?;
    Ok(summary)
}
