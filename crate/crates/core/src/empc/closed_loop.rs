use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::action::{Action, ActionModel};
use super::config::ControllerConfig;
use super::feasibility::{evaluate_action, total_quarantine_policy, BoundSummary};
use super::optimizer::multistart_local_descent;
use crate::closure::{integrate_bounds, BoundsTrajectory, ClosureKind};
use crate::error::Result;
use crate::model::{SpreadingGraph, SystemState};
use crate::stochastic::{EventTrajectory, PathSimulator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Multi-start local descent on the robust stability constraint.
    Empc,
    /// Quarantine every exposed and infected node.
    TotalQuarantine,
}

/// One controller decision at a sampling time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub time: f64,
    /// Exposed plus infected count observed at `time`.
    pub ell: usize,
    pub action: Action,
    pub cost: f64,
    /// Cost of total quarantine at the same state.
    pub auxiliary_cost: f64,
    pub auxiliary_feasible: bool,
    pub bound: BoundSummary,
    pub evaluations: usize,
    /// Largest number of feasibility queries in any single descent.
    pub max_descent_queries: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundTrace {
    pub time: f64,
    pub trajectory: BoundsTrajectory,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopRecord {
    pub policy: Policy,
    pub trajectory: EventTrajectory,
    pub decisions: Vec<Decision>,
    /// First time the exposed plus infected count hit zero, if within the run.
    pub elimination_time: Option<f64>,
    pub end_time: f64,
    /// Full predicted bounds for each decision; empty unless requested in the config.
    pub bound_traces: Vec<BoundTrace>,
}

impl ClosedLoopRecord {
    pub fn actions(&self) -> impl Iterator<Item = (f64, &Action)> {
        self.decisions.iter().map(|d| (d.time, &d.action))
    }

    pub fn costs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.decisions.iter().map(|d| (d.time, d.cost))
    }

    /// Exposed plus infected count at each of `times`.
    pub fn ell_at(&self, times: &[f64]) -> Vec<usize> {
        self.trajectory.states_at(times).iter().map(|s| s.exposed_infected_count()).collect()
    }

    /// CSV with columns `time,ell,cost,auxiliary_cost,margin,optimal_upper,action`.
    pub fn write_actions_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "time,ell,cost,auxiliary_cost,margin,optimal_upper,action")?;
        for d in &self.decisions {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                d.time, d.ell, d.cost, d.auxiliary_cost, d.bound.margin, d.bound.optimal_upper, d.action
            )?;
        }
        Ok(())
    }

    /// CSV of the recorded bound traces on absolute time, columns as in
    /// [`BoundsTrajectory::write_csv`] with a leading `decision_time`.
    pub fn write_bound_traces_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "decision_time,time,node,lo_S,up_S,lo_E,up_E,lo_I,up_I,lo_V,up_V")?;
        for trace in &self.bound_traces {
            for (t, s) in trace.trajectory.times.iter().zip(&trace.trajectory.states) {
                for i in 0..s.node_count() {
                    write!(w, "{},{},{i}", trace.time, trace.time + t)?;
                    for c in 0..4 {
                        write!(w, ",{},{}", s.lower[i][c], s.upper[i][c])?;
                    }
                    writeln!(w)?;
                }
            }
        }
        Ok(())
    }
}

/// Runs the sampled-data loop: observe the exact state at each sampling time,
/// choose an action, then simulate the process under that action until the
/// next sampling time. `rng` drives the simulation; the optimizer draws from
/// a separate generator seeded from it.
pub fn run_closed_loop<M, R>(
    graph: &SpreadingGraph,
    model: &M,
    x0: &SystemState,
    cfg: &ControllerConfig,
    policy: Policy,
    rng: &mut R,
) -> Result<ClosedLoopRecord>
where
    M: ActionModel + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let mut controller_rng = ChaCha8Rng::seed_from_u64(rng.gen());
    let mut sim = PathSimulator::new(graph, x0.clone())?;
    let mut decisions = Vec::new();
    let mut bound_traces = Vec::new();
    let n = graph.node_count();

    for t in cfg.sampling_times() {
        let state = sim.state().clone();
        let ell = state.exposed_infected_count();
        if ell == 0 && cfg.stop_at_elimination {
            break;
        }
        let auxiliary_cost = model.cost(&total_quarantine_policy(&state));
        let decision = if ell == 0 {
            Decision {
                time: t,
                ell,
                action: Action::none(n),
                cost: model.cost(&Action::none(n)),
                auxiliary_cost,
                auxiliary_feasible: true,
                bound: BoundSummary { margin: 0.0, optimal_upper: 0.0, sum_upper: 0.0, sum_lower: 0.0 },
                evaluations: 0,
                max_descent_queries: 0,
            }
        } else {
            let mut summaries: HashMap<Action, BoundSummary> = HashMap::new();
            let mut margin = |a: &Action| -> Result<f64> {
                let (s, _) = evaluate_action(graph, model, a, &state, cfg)?;
                summaries.insert(a.clone(), s);
                Ok(s.margin)
            };
            match policy {
                Policy::Empc => {
                    let out =
                        multistart_local_descent(&state, cfg.k_max, |a| model.cost(a), &mut margin, &mut controller_rng)?;
                    Decision {
                        time: t,
                        ell,
                        cost: out.cost,
                        auxiliary_cost,
                        auxiliary_feasible: out.auxiliary_feasible,
                        bound: summaries[&out.action],
                        evaluations: out.evaluations,
                        max_descent_queries: out.descent_queries.iter().copied().max().unwrap_or(0),
                        action: out.action,
                    }
                }
                Policy::TotalQuarantine => {
                    let action = total_quarantine_policy(&state);
                    let m = margin(&action)?;
                    Decision {
                        time: t,
                        ell,
                        cost: auxiliary_cost,
                        auxiliary_cost,
                        auxiliary_feasible: m <= 0.0,
                        bound: summaries[&action],
                        evaluations: 1,
                        max_descent_queries: 0,
                        action,
                    }
                }
            }
        };

        let params = model.apply(&decision.action)?;
        if cfg.record_bound_traces {
            let trajectory = integrate_bounds(ClosureKind::Refined, graph, &params, &state, cfg.dt, cfg.step())?;
            bound_traces.push(BoundTrace { time: t, trajectory });
        }
        decisions.push(decision);
        sim.advance(&params, (t + cfg.dt).min(cfg.horizon), rng);
    }

    let end_time = sim.time();
    let trajectory = sim.into_trajectory();
    let elimination_time = trajectory.elimination_time();
    Ok(ClosedLoopRecord { policy, trajectory, decisions, elimination_time, end_time, bound_traces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empc::QuarantineMap;
    use crate::graph::erdos_renyi;
    use crate::model::{Compartment, SpreadingParams, UniformRates};

    fn setup(n: usize, p: f64, seed: u64) -> (SpreadingGraph, QuarantineMap) {
        let g = erdos_renyi(n, p, seed).unwrap();
        let map = QuarantineMap::new(&g, SpreadingParams::uniform(&g, UniformRates::REFERENCE)).unwrap();
        (g, map)
    }

    #[test]
    fn disease_free_start_is_eliminated_at_zero() {
        let (g, map) = setup(6, 0.5, 1);
        let x0 = SystemState::uniform(6, Compartment::S);
        let rec = run_closed_loop(&g, &map, &x0, &ControllerConfig::default(), Policy::Empc, &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        assert_eq!(rec.elimination_time, Some(0.0));
        assert!(rec.decisions.is_empty());

        let cfg = ControllerConfig { horizon: 1.0, stop_at_elimination: false, ..Default::default() };
        let rec = run_closed_loop(&g, &map, &x0, &cfg, Policy::Empc, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(rec.decisions.len(), 3);
        assert!(rec.costs().all(|(_, c)| c == 0.0));
        assert_eq!(rec.end_time, 1.0);
    }

    #[test]
    fn single_infected_node_is_eliminated() {
        let (g, map) = setup(1, 0.0, 0);
        let x0: SystemState = "I".parse().unwrap();
        for seed in 0..50 {
            let rec =
                run_closed_loop(&g, &map, &x0, &ControllerConfig::default(), Policy::Empc, &mut ChaCha8Rng::seed_from_u64(seed))
                    .unwrap();
            let te = rec.elimination_time.expect("eliminated");
            assert!(te > 0.0 && te <= rec.end_time);
        }
    }

    #[test]
    fn decisions_are_feasible_and_dominate_total_quarantine() {
        let (g, map) = setup(12, 0.5, 7);
        let x0: SystemState = "IEIESSSSVVSS".parse().unwrap();
        let cfg = ControllerConfig { horizon: 6.0, record_bound_traces: true, ..Default::default() };
        let rec = run_closed_loop(&g, &map, &x0, &cfg, Policy::Empc, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(!rec.decisions.is_empty());
        assert_eq!(rec.bound_traces.len(), rec.decisions.len());
        for d in &rec.decisions {
            assert!(d.auxiliary_feasible);
            assert!(d.bound.margin <= 0.0);
            assert!(d.cost <= d.auxiliary_cost);
            assert!(d.max_descent_queries <= 12 * 13 / 2);
        }
        let times: Vec<f64> = rec.decisions.iter().map(|d| d.time).collect();
        for (k, t) in times.iter().enumerate() {
            assert!((t - k as f64 * cfg.dt).abs() < 1e-12);
        }
        assert_eq!(rec.ell_at(&times), rec.decisions.iter().map(|d| d.ell).collect::<Vec<_>>());
    }

    #[test]
    fn runs_are_reproducible() {
        let (g, map) = setup(10, 0.6, 2);
        let x0: SystemState = "IIEESSSSSS".parse().unwrap();
        let cfg = ControllerConfig { horizon: 4.0, ..Default::default() };
        let a = run_closed_loop(&g, &map, &x0, &cfg, Policy::Empc, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = run_closed_loop(&g, &map, &x0, &cfg, Policy::Empc, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        let mut buf = Vec::new();
        a.write_actions_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), a.decisions.len() + 1);
    }

    #[test]
    fn total_quarantine_policy_run() {
        let (g, map) = setup(10, 0.6, 5);
        let x0: SystemState = "IIEESSSSSS".parse().unwrap();
        let cfg = ControllerConfig { horizon: 3.0, ..Default::default() };
        let rec = run_closed_loop(&g, &map, &x0, &cfg, Policy::TotalQuarantine, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        for d in &rec.decisions {
            assert_eq!(d.cost, d.ell as f64);
            assert!(d.bound.margin <= 0.0);
        }
    }
}
