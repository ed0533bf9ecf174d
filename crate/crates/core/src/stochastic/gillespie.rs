//! Gillespie direct-method sample paths.
//!
//! At each state the waiting time is exponential in the total jump rate and
//! the jump is drawn proportionally to the individual rates. Parameter
//! changes at schedule breakpoints truncate the pending waiting time and
//! restart the clock, which is exact because holding times are memoryless.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::rates::{exposure_pressure, node_rates};
use crate::error::{Error, Result};
use crate::model::{Compartment, SpreadingGraph, SpreadingParams, SystemState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub node: usize,
    pub from: Compartment,
    pub to: Compartment,
}

fn allowed_transition(from: Compartment, to: Compartment) -> bool {
    use Compartment::*;
    matches!((from, to), (S, E) | (S, V) | (E, I) | (I, V) | (V, S))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventTrajectory {
    pub initial: SystemState,
    pub events: Vec<Event>,
}

impl EventTrajectory {
    /// State after every event with `time <= t`.
    pub fn state_at(&self, t: f64) -> SystemState {
        let mut s = self.initial.clone();
        for ev in self.events.iter().take_while(|ev| ev.time <= t) {
            s.set(ev.node, ev.to);
        }
        s
    }

    pub fn final_state(&self) -> SystemState {
        self.state_at(f64::INFINITY)
    }

    /// States at each of the sorted `times`, computed in a single pass.
    pub fn states_at(&self, times: &[f64]) -> Vec<SystemState> {
        let mut s = self.initial.clone();
        let mut next = 0;
        times
            .iter()
            .map(|&t| {
                while next < self.events.len() && self.events[next].time <= t {
                    let ev = self.events[next];
                    s.set(ev.node, ev.to);
                    next += 1;
                }
                s.clone()
            })
            .collect()
    }

    /// First time the number of exposed and infected nodes reaches zero.
    pub fn elimination_time(&self) -> Option<f64> {
        let mut ell = self.initial.exposed_infected_count();
        if ell == 0 {
            return Some(0.0);
        }
        for ev in &self.events {
            ell = ell + ev.to.is_diseased() as usize - ev.from.is_diseased() as usize;
            if ell == 0 {
                return Some(ev.time);
            }
        }
        None
    }

    /// Checks time ordering, label consistency and that only SEIV arcs occur.
    pub fn validate(&self) -> Result<()> {
        let mut s = self.initial.clone();
        let mut last = f64::NEG_INFINITY;
        for (k, ev) in self.events.iter().enumerate() {
            if !(ev.time > last) || ev.time < 0.0 {
                return Err(Error::Parse(format!("event {k}: time {} not strictly increasing", ev.time)));
            }
            if ev.node >= s.len() || s.get(ev.node) != ev.from {
                return Err(Error::Parse(format!("event {k}: node {} is not in {}", ev.node, ev.from)));
            }
            if !allowed_transition(ev.from, ev.to) {
                return Err(Error::Parse(format!("event {k}: {} -> {} is not a SEIV transition", ev.from, ev.to)));
            }
            s.set(ev.node, ev.to);
            last = ev.time;
        }
        Ok(())
    }

    /// CSV with columns `time,node,from,to`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "time,node,from,to")?;
        for ev in &self.events {
            writeln!(w, "{},{},{},{}", ev.time, ev.node, ev.from, ev.to)?;
        }
        Ok(())
    }
}

/// Piecewise-constant parameters: segment `k` applies from `breakpoints[k]`
/// until the next breakpoint.
#[derive(Clone, Debug)]
pub struct ParamsSchedule {
    segments: Vec<(f64, SpreadingParams)>,
}

impl ParamsSchedule {
    pub fn constant(params: SpreadingParams) -> Self {
        Self { segments: vec![(0.0, params)] }
    }

    /// `segments` must start at time 0 with strictly increasing start times.
    pub fn new(segments: Vec<(f64, SpreadingParams)>) -> Result<Self> {
        match segments.first() {
            Some((t0, _)) if *t0 == 0.0 => {}
            _ => return Err(Error::InvalidParameter("schedule must start at time 0".into())),
        }
        if segments.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidParameter("schedule breakpoints must increase".into()));
        }
        Ok(Self { segments })
    }

    pub fn validate(&self, graph: &SpreadingGraph) -> Result<()> {
        self.segments.iter().try_for_each(|(_, p)| p.validate(graph))
    }

    fn pieces(&self, horizon: f64) -> impl Iterator<Item = (f64, f64, &SpreadingParams)> + '_ {
        let n = self.segments.len();
        (0..n).filter_map(move |k| {
            let start = self.segments[k].0;
            let end = if k + 1 < n { self.segments[k + 1].0.min(horizon) } else { horizon };
            (start < end).then_some((start, end, &self.segments[k].1))
        })
    }
}

/// Incrementally advanced sample path. Used directly by the closed loop,
/// which changes parameters at every sampling time.
pub struct PathSimulator<'g> {
    graph: &'g SpreadingGraph,
    state: SystemState,
    time: f64,
    pressure: Vec<f64>,
    node_total: Vec<f64>,
    trajectory: EventTrajectory,
}

impl<'g> PathSimulator<'g> {
    pub fn new(graph: &'g SpreadingGraph, x0: SystemState) -> Result<Self> {
        x0.check_len(graph.node_count())?;
        let n = graph.node_count();
        Ok(Self {
            graph,
            state: x0.clone(),
            time: 0.0,
            pressure: vec![0.0; n],
            node_total: vec![0.0; n],
            trajectory: EventTrajectory { initial: x0, events: Vec::new() },
        })
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn into_trajectory(self) -> EventTrajectory {
        self.trajectory
    }

    pub fn trajectory(&self) -> &EventTrajectory {
        &self.trajectory
    }

    fn refresh_node(&mut self, params: &SpreadingParams, i: usize) {
        let c = self.state.get(i);
        self.pressure[i] = exposure_pressure(self.graph, params, self.state.labels(), i);
        let p = if c == Compartment::S { self.pressure[i] } else { 0.0 };
        self.node_total[i] = node_rates(params, i, c, p).iter().map(|&(_, r)| r).sum();
    }

    /// Runs the process under fixed `params` from the current time to `until`.
    pub fn advance<R: Rng + ?Sized>(&mut self, params: &SpreadingParams, until: f64, rng: &mut R) {
        for i in 0..self.graph.node_count() {
            self.refresh_node(params, i);
        }
        loop {
            let total: f64 = self.node_total.iter().sum();
            if total <= 0.0 {
                break;
            }
            let wait: f64 = Exp1.sample(rng);
            let t = self.time + wait / total;
            if t > until {
                break;
            }
            let (node, to) = self.pick(params, rng.gen::<f64>() * total);
            let from = self.state.get(node);
            self.state.set(node, to);
            self.time = t;
            self.trajectory.events.push(Event { time: t, node, from, to });

            self.refresh_node(params, node);
            if from.is_diseased() || to.is_diseased() {
                for k in 0..self.graph.out_edges(node).len() {
                    let i = self.graph.out_edges(node)[k].0;
                    self.refresh_node(params, i);
                }
            }
        }
        self.time = until;
    }

    fn pick(&self, params: &SpreadingParams, mut u: f64) -> (usize, Compartment) {
        let mut last = None;
        for (i, &rate) in self.node_total.iter().enumerate() {
            if rate <= 0.0 {
                continue;
            }
            last = Some(i);
            if u < rate {
                return (i, self.pick_target(params, i, u));
            }
            u -= rate;
        }
        // rounding pushed u past the final positive rate
        let i = last.expect("positive total rate");
        (i, self.pick_target(params, i, self.node_total[i]))
    }

    fn pick_target(&self, params: &SpreadingParams, i: usize, mut u: f64) -> Compartment {
        let c = self.state.get(i);
        let p = if c == Compartment::S { self.pressure[i] } else { 0.0 };
        let options = node_rates(params, i, c, p);
        for &(target, r) in &options {
            if r > 0.0 && target != c {
                if u < r {
                    return target;
                }
                u -= r;
            }
        }
        options.iter().rev().find(|(t, r)| *r > 0.0 && *t != c).map(|(t, _)| *t).unwrap()
    }
}

/// Samples a path of the process on `[0, horizon]`.
pub fn simulate_path<R: Rng + ?Sized>(
    graph: &SpreadingGraph,
    schedule: &ParamsSchedule,
    x0: &SystemState,
    horizon: f64,
    rng: &mut R,
) -> Result<EventTrajectory> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon {horizon} must be positive")));
    }
    schedule.validate(graph)?;
    let mut sim = PathSimulator::new(graph, x0.clone())?;
    for (_, end, params) in schedule.pieces(horizon) {
        sim.advance(params, end, rng);
    }
    Ok(sim.into_trajectory())
}
