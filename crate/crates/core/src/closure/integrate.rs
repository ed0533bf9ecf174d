use std::io::Write;

use serde::{Deserialize, Serialize};

use super::dynamics::field;
use super::{BoundsState, ClosureKind, STRIDE};
use crate::error::{Error, Result};
use crate::integrate::{step_count, Rk4};
use crate::model::{Compartment, SpreadingGraph, SpreadingParams, SystemState};

/// Additive slack for ordering checks on integrated bounds.
pub const DEFAULT_SLACK: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrationSettings {
    pub step: f64,
    /// Allowed `lower - upper` before a bound pair counts as crossed.
    pub slack: f64,
    /// Clamp lower bounds at 0 and upper bounds at 1 after every step.
    pub clamp_unit: bool,
}

impl IntegrationSettings {
    pub fn for_kind(kind: ClosureKind, step: f64) -> Self {
        Self { step, slack: DEFAULT_SLACK, clamp_unit: kind == ClosureKind::Refined }
    }
}

/// Bounds sampled on the integration grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<BoundsState>,
}

impl BoundsTrajectory {
    pub fn last(&self) -> &BoundsState {
        self.states.last().expect("trajectory has its initial state")
    }

    /// CSV with columns `time,node,lo_S,up_S,lo_E,up_E,lo_I,up_I,lo_V,up_V`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "time,node,lo_S,up_S,lo_E,up_E,lo_I,up_I,lo_V,up_V")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            for i in 0..s.node_count() {
                write!(w, "{t},{i}")?;
                for c in 0..4 {
                    write!(w, ",{},{}", s.lower[i][c], s.upper[i][c])?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

fn post_step(x: &mut [f64], settings: &IntegrationSettings) -> Result<()> {
    for (i, block) in x.chunks_exact_mut(STRIDE).enumerate() {
        if settings.clamp_unit {
            for c in 0..4 {
                block[c] = block[c].max(0.0);
                block[4 + c] = block[4 + c].min(1.0);
            }
        }
        for c in 0..4 {
            let (lower, upper) = (block[c], block[4 + c]);
            if !(lower <= upper + settings.slack) {
                return Err(Error::BoundsViolation {
                    node: i,
                    compartment: Compartment::from_index(c).unwrap().symbol(),
                    lower,
                    upper,
                });
            }
        }
    }
    Ok(())
}

/// Integrates an arbitrary bound field from `initial` over `duration`.
///
/// `record` receives `(time, flat state)` at every grid point including time 0.
/// Exposed so that alternative or deliberately corrupted fields can be run
/// through the same integrator.
pub fn integrate_with_field<F, G>(
    initial: &BoundsState,
    duration: f64,
    settings: IntegrationSettings,
    mut field: F,
    mut record: G,
) -> Result<BoundsState>
where
    F: FnMut(&[f64], &mut [f64]),
    G: FnMut(f64, &[f64]),
{
    let steps = step_count(duration, settings.step)?;
    let mut x = initial.to_flat();
    record(0.0, &x);
    if steps > 0 {
        let h = duration / steps as f64;
        let mut rk = Rk4::new(x.len());
        for k in 1..=steps {
            rk.step(&mut x, h, &mut field);
            post_step(&mut x, &settings)?;
            record(if k == steps { duration } else { k as f64 * h }, &x);
        }
    }
    Ok(BoundsState::from_flat(&x))
}

fn check_inputs(graph: &SpreadingGraph, params: &SpreadingParams, x0: &SystemState) -> Result<()> {
    params.validate(graph)?;
    x0.check_len(graph.node_count())
}

/// Integrates the chosen closure from the point mass on `x0`, recording every grid point.
pub fn integrate_bounds(
    kind: ClosureKind,
    graph: &SpreadingGraph,
    params: &SpreadingParams,
    x0: &SystemState,
    duration: f64,
    step: f64,
) -> Result<BoundsTrajectory> {
    check_inputs(graph, params, x0)?;
    let refined = kind == ClosureKind::Refined;
    let mut traj = BoundsTrajectory { times: Vec::new(), states: Vec::new() };
    integrate_with_field(
        &BoundsState::indicator(x0),
        duration,
        IntegrationSettings::for_kind(kind, step),
        |x, dx| field(graph, params, refined, x, dx),
        |t, x| {
            traj.times.push(t);
            traj.states.push(BoundsState::from_flat(x));
        },
    )?;
    Ok(traj)
}

/// As [`integrate_bounds`] but returns only the final state.
pub fn integrate_bounds_final(
    kind: ClosureKind,
    graph: &SpreadingGraph,
    params: &SpreadingParams,
    x0: &SystemState,
    duration: f64,
    step: f64,
) -> Result<BoundsState> {
    check_inputs(graph, params, x0)?;
    let refined = kind == ClosureKind::Refined;
    integrate_with_field(
        &BoundsState::indicator(x0),
        duration,
        IntegrationSettings::for_kind(kind, step),
        |x, dx| field(graph, params, refined, x, dx),
        |_, _| {},
    )
}
