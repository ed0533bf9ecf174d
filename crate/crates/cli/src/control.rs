use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use seiv_core::analysis::{
    bootstrap_summary, decay_envelope, survival_bound, BootstrapSummary, EliminationReport, EliminationStats,
};
use seiv_core::empc::{run_closed_loop, ClosedLoopRecord, Policy};
use seiv_core::rng::{stream, Purpose};

use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult};
use crate::output::OutputDir;
use crate::{in_pool, sampling_grid};

/// Per-replication values on the sampling grid, plus decision statistics.
#[derive(Clone, Debug, Serialize)]
pub struct TrialSummary {
    pub ell: Vec<usize>,
    /// Quarantined fraction of nodes chosen at each grid time (0 after elimination).
    pub quarantine_fraction: Vec<f64>,
    /// Optimal robust upper bound predicted at each grid time for one interval later.
    pub predicted_upper: Vec<f64>,
    pub elimination_time: Option<f64>,
    pub decisions: usize,
    pub dominated_decisions: usize,
    pub feasible_decisions: usize,
    pub auxiliary_infeasible: usize,
    pub max_descent_queries: usize,
    pub evaluations: usize,
}

fn summarize(rec: &ClosedLoopRecord, grid: &[f64], n: usize) -> TrialSummary {
    let mut quarantine_fraction = vec![0.0; grid.len()];
    let mut predicted_upper = vec![0.0; grid.len()];
    for (k, d) in rec.decisions.iter().enumerate().take(grid.len()) {
        quarantine_fraction[k] = d.cost / n as f64;
        predicted_upper[k] = d.bound.optimal_upper;
    }
    TrialSummary {
        ell: rec.ell_at(grid),
        quarantine_fraction,
        predicted_upper,
        elimination_time: rec.elimination_time,
        decisions: rec.decisions.len(),
        dominated_decisions: rec.decisions.iter().filter(|d| d.cost <= d.auxiliary_cost).count(),
        feasible_decisions: rec.decisions.iter().filter(|d| d.bound.margin <= 0.0).count(),
        auxiliary_infeasible: rec.decisions.iter().filter(|d| !d.auxiliary_feasible).count(),
        max_descent_queries: rec.decisions.iter().map(|d| d.max_descent_queries).max().unwrap_or(0),
        evaluations: rec.decisions.iter().map(|d| d.evaluations).sum(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TimeStatistics {
    pub time: f64,
    pub ell: BootstrapSummary,
    pub envelope: f64,
    pub survival_frequency: f64,
    pub survival_bound: f64,
    pub empc_quarantine_fraction: f64,
    pub baseline_quarantine_fraction: Option<f64>,
    pub baseline_mean_ell: Option<f64>,
    /// Mean prediction made one interval earlier for this time.
    pub mean_predicted_upper: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ControlReport {
    #[serde(flatten)]
    pub elimination: EliminationReport,
    pub ell0: usize,
    pub nodes: usize,
    pub trials: usize,
    pub completed_trials: usize,
    pub eliminated: usize,
    pub baseline_empirical_mean: Option<f64>,
    pub decisions: usize,
    pub dominated_decisions: usize,
    pub feasible_decisions: usize,
    pub auxiliary_infeasible: usize,
    pub max_descent_queries: usize,
    pub descent_query_limit: usize,
    pub failures: Vec<TrialFailure>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub policy: Policy,
    pub error: String,
}

pub struct ControlOutcome {
    pub grid: Vec<f64>,
    pub empc: Vec<Option<TrialSummary>>,
    pub baseline: Vec<Option<TrialSummary>>,
    pub records: Vec<ClosedLoopRecord>,
    pub statistics: Vec<TimeStatistics>,
    pub report: ControlReport,
}

fn run_policy(
    cfg: &ScenarioConfig,
    sc: &crate::Scenario,
    policy: Policy,
    grid: &[f64],
) -> Vec<(Option<TrialSummary>, Option<ClosedLoopRecord>, Option<TrialFailure>)> {
    let purpose = match policy {
        Policy::Empc => Purpose::Simulation,
        Policy::TotalQuarantine => Purpose::Baseline,
    };
    let n = sc.graph.node_count();
    (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.root_seed(), purpose, i as u64);
            match run_closed_loop(&sc.graph, &sc.map, &sc.x0, &cfg.controller, policy, &mut rng) {
                Ok(rec) => {
                    let s = summarize(&rec, grid, n);
                    let keep = policy == Policy::Empc && i < cfg.control.record_trials;
                    (Some(s), keep.then_some(rec), None)
                }
                Err(e) => (None, None, Some(TrialFailure { trial: i, policy, error: e.to_string() })),
            }
        })
        .collect()
}

fn column_mean<F: Fn(&TrialSummary) -> f64>(runs: &[&TrialSummary], f: F) -> f64 {
    runs.iter().map(|s| f(s)).sum::<f64>() / runs.len() as f64
}

/// Runs every replication under EMPC (and the total-quarantine baseline when
/// enabled) and computes the ensemble statistics.
pub fn run_control(cfg: &ScenarioConfig) -> CliResult<ControlOutcome> {
    cfg.validate_trials()?;
    let sc = cfg.build()?;
    let ctl = &cfg.controller;
    let grid = sampling_grid(ctl.dt, ctl.horizon);
    let n = sc.graph.node_count();
    let ell0 = sc.x0.exposed_infected_count();

    let (empc_raw, baseline_raw) = in_pool(cfg.workers, || {
        let e = run_policy(cfg, &sc, Policy::Empc, &grid);
        let b = if cfg.control.baseline { run_policy(cfg, &sc, Policy::TotalQuarantine, &grid) } else { Vec::new() };
        (e, b)
    })?;

    let mut failures = Vec::new();
    let mut records = Vec::new();
    let mut split = |raw: Vec<(Option<TrialSummary>, Option<ClosedLoopRecord>, Option<TrialFailure>)>| {
        raw.into_iter()
            .map(|(s, r, f)| {
                records.extend(r);
                failures.extend(f);
                s
            })
            .collect::<Vec<_>>()
    };
    let empc = split(empc_raw);
    let baseline = split(baseline_raw);

    let done: Vec<&TrialSummary> = empc.iter().flatten().collect();
    if done.is_empty() {
        return Err(CliError::Failed(format!("every replication failed; first error: {}", failures[0].error)));
    }
    let base_done: Vec<&TrialSummary> = baseline.iter().flatten().collect();
    let m = done.len() as f64;

    let mut statistics = Vec::with_capacity(grid.len());
    for (k, &t) in grid.iter().enumerate() {
        let samples: Vec<f64> = done.iter().map(|s| s.ell[k] as f64).collect();
        let mut rng = stream(cfg.root_seed(), Purpose::Bootstrap, k as u64);
        let ell = bootstrap_summary(&samples, cfg.control.confidence_level, cfg.control.bootstrap_resamples, &mut rng)?;
        let base = (!base_done.is_empty()).then_some(&base_done);
        statistics.push(TimeStatistics {
            time: t,
            ell,
            envelope: decay_envelope(ell0, ctl.r, t),
            survival_frequency: done.iter().filter(|s| s.ell[k] > 0).count() as f64 / m,
            survival_bound: survival_bound(ell0, ctl.r, ctl.dt, t)?,
            empc_quarantine_fraction: column_mean(&done, |s| s.quarantine_fraction[k]),
            baseline_quarantine_fraction: base.map(|b| column_mean(b, |s| s.quarantine_fraction[k])),
            baseline_mean_ell: base.map(|b| column_mean(b, |s| s.ell[k] as f64)),
            mean_predicted_upper: (k > 0).then(|| column_mean(&done, |s| s.predicted_upper[k - 1])),
        });
    }

    let elim: Vec<f64> = done.iter().filter_map(|s| s.elimination_time).collect();
    let elimination = if elim.is_empty() {
        EliminationReport {
            tau_one: seiv_core::analysis::tau_one(ell0, ctl.r, ctl.dt)?,
            elim_bound: seiv_core::analysis::elimination_time_bound(ell0, ctl.r, ctl.dt)?,
            empirical_mean: f64::NAN,
            ci: [f64::NAN, f64::NAN],
        }
    } else {
        let stats = EliminationStats::new(elim.clone(), ell0, ctl.r, ctl.dt)?;
        let mut rng = stream(cfg.root_seed(), Purpose::Bootstrap, grid.len() as u64);
        stats.report(ell0, ctl.r, ctl.dt, cfg.control.confidence_level, cfg.control.bootstrap_resamples, &mut rng)?
    };
    let base_elim: Vec<f64> = base_done.iter().filter_map(|s| s.elimination_time).collect();

    let report = ControlReport {
        elimination,
        ell0,
        nodes: n,
        trials: cfg.trials,
        completed_trials: done.len(),
        eliminated: elim.len(),
        baseline_empirical_mean: (!base_elim.is_empty()).then(|| base_elim.iter().sum::<f64>() / base_elim.len() as f64),
        decisions: done.iter().map(|s| s.decisions).sum(),
        dominated_decisions: done.iter().map(|s| s.dominated_decisions).sum(),
        feasible_decisions: done.iter().map(|s| s.feasible_decisions).sum(),
        auxiliary_infeasible: done.iter().map(|s| s.auxiliary_infeasible).sum(),
        max_descent_queries: done.iter().map(|s| s.max_descent_queries).max().unwrap_or(0),
        descent_query_limit: n * (n + 1) / 2,
        failures,
    };
    Ok(ControlOutcome { grid, empc, baseline, records, statistics, report })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}


pub fn cmd_control(cfg: &ScenarioConfig, out: &Path) -> CliResult<ControlReport> {
    let outcome = run_control(cfg)?;
    let out = OutputDir::create(out)?;

    out.write_with("ensemble.csv", |w| {
        writeln!(
            w,
            "time,mean_ell,se_ell,ci_lo,ci_hi,envelope,survival_frequency,survival_bound,\
             empc_quarantine_fraction,baseline_quarantine_fraction,baseline_mean_ell,mean_predicted_upper"
        )?;
        for s in &outcome.statistics {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                s.time,
                s.ell.mean,
                s.ell.standard_error,
                s.ell.lower,
                s.ell.upper,
                s.envelope,
                s.survival_frequency,
                s.survival_bound,
                s.empc_quarantine_fraction,
                opt(s.baseline_quarantine_fraction),
                opt(s.baseline_mean_ell),
                opt(s.mean_predicted_upper)
            )?;
        }
        Ok(())
    })?;

    out.write_with("runs.csv", |w| {
        writeln!(w, "trial,policy,elimination_time,decisions,total_cost,evaluations")?;
        for (policy, runs) in [("empc", &outcome.empc), ("total_quarantine", &outcome.baseline)] {
            for (i, s) in runs.iter().enumerate() {
                if let Some(s) = s {
                    let n = outcome.report.nodes as f64;
                    let cost: f64 = s.quarantine_fraction.iter().map(|f| f * n).sum();
                    writeln!(w, "{i},{policy},{},{},{},{}", opt(s.elimination_time), s.decisions, cost.round(), s.evaluations)?;
                }
            }
        }
        Ok(())
    })?;

    for (i, rec) in outcome.records.iter().enumerate() {
        out.write_json(&format!("record_{i:04}.json"), rec)?;
        out.write_with(&format!("record_{i:04}_actions.csv"), |w| rec.write_actions_csv(w))?;
        out.write_with(&format!("record_{i:04}_trajectory.csv"), |w| rec.trajectory.write_csv(w))?;
        if !rec.bound_traces.is_empty() {
            out.write_with(&format!("record_{i:04}_bounds.csv"), |w| rec.write_bound_traces_csv(w))?;
        }
    }

    out.write_json("report.json", &outcome.report)?;
    out.write_metadata("control", cfg)?;
    if let Some(f) = outcome.report.failures.first() {
        return Err(CliError::Failed(format!(
            "{} replication(s) failed; first: trial {} ({:?}): {}",
            outcome.report.failures.len(),
            f.trial,
            f.policy,
            f.error
        )));
    }
    Ok(outcome.report)
}
