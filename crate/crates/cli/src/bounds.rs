use std::io::Write;
use std::path::Path;

use serde::Serialize;

use seiv_core::closure::{integrate_bounds, optimal_exposed_infected_upper, BoundsTrajectory, ClosureKind, DEFAULT_SLACK};

use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult};
use crate::output::OutputDir;

#[derive(Clone, Debug, Serialize)]
pub struct BoundsSummary {
    pub horizon: f64,
    pub step: f64,
    pub grid_points: usize,
    pub nested_everywhere: bool,
    pub refined_max_upper: f64,
    pub crude_max_upper: f64,
}

pub struct BoundsRun {
    pub crude: BoundsTrajectory,
    pub refined: BoundsTrajectory,
}

pub fn run_bounds(cfg: &ScenarioConfig) -> CliResult<BoundsRun> {
    let sc = cfg.build()?;
    let step = cfg.controller.step();
    let run = |kind| integrate_bounds(kind, &sc.graph, &sc.params, &sc.x0, cfg.bounds.horizon, step);
    Ok(BoundsRun { crude: run(ClosureKind::Crude)?, refined: run(ClosureKind::Refined)? })
}

/// Crude and refined bound traces from the scenario's initial state, with a
/// per-time nesting check.
pub fn cmd_bounds(cfg: &ScenarioConfig, out: &Path) -> CliResult<BoundsSummary> {
    let run = run_bounds(cfg)?;
    if run.crude.times.len() != run.refined.times.len() {
        return Err(CliError::Failed("crude and refined grids differ".into()));
    }
    let out = OutputDir::create(out)?;
    out.write_with("crude.csv", |w| run.crude.write_csv(w))?;
    out.write_with("refined.csv", |w| run.refined.write_csv(w))?;

    let mut nested_everywhere = true;
    out.write_with("checks.csv", |w| {
        writeln!(w, "time,nested,refined_in_unit,crude_max_upper,refined_max_upper,crude_optimal_upper,refined_optimal_upper")?;
        for ((t, c), r) in run.crude.times.iter().zip(&run.crude.states).zip(&run.refined.states) {
            let nested = r.nested_in(c, DEFAULT_SLACK);
            nested_everywhere &= nested;
            let in_unit = r.min_lower() >= -DEFAULT_SLACK && r.max_upper() <= 1.0 + DEFAULT_SLACK;
            writeln!(
                w,
                "{t},{nested},{in_unit},{},{},{},{}",
                c.max_upper(),
                r.max_upper(),
                optimal_exposed_infected_upper(c),
                optimal_exposed_infected_upper(r)
            )?;
        }
        Ok(())
    })?;

    let max_upper = |tr: &BoundsTrajectory| tr.states.iter().map(|s| s.max_upper()).fold(f64::NEG_INFINITY, f64::max);
    let summary = BoundsSummary {
        horizon: cfg.bounds.horizon,
        step: cfg.controller.step(),
        grid_points: run.refined.times.len(),
        nested_everywhere,
        refined_max_upper: max_upper(&run.refined),
        crude_max_upper: max_upper(&run.crude),
    };
    out.write_json("summary.json", &summary)?;
    out.write_metadata("bounds", cfg)?;
    Ok(summary)
}
