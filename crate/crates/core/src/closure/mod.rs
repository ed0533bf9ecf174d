//! Robust moment closure: interval bounds on every marginal probability
//! `E[X_i^C(t)]`, propagated by ODE systems built from the Fréchet operators.
//!
//! [`ClosureKind::Crude`] bounds every joint-probability term by its Fréchet
//! bound. [`ClosureKind::Refined`] additionally caps each inflow into an
//! upper bound by the complement of that bound, which keeps all bounds in
//! `[0, 1]` and nests them inside the crude intervals.

mod dynamics;
mod integrate;

pub use dynamics::{bounds_field, complement_bound, crude_rhs, refined_rhs};
pub use integrate::{
    integrate_bounds, integrate_bounds_final, integrate_with_field, BoundsTrajectory, IntegrationSettings,
    DEFAULT_SLACK,
};

use serde::{Deserialize, Serialize};

use crate::model::{Compartment, MarginalVector, SystemState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClosureKind {
    Crude,
    Refined,
}

/// Lower and upper bounds per node and compartment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsState {
    pub lower: Vec<[f64; 4]>,
    pub upper: Vec<[f64; 4]>,
}

/// Values per node in the flat layout used by the integrator:
/// `[lo_S, lo_E, lo_I, lo_V, up_S, up_E, up_I, up_V]`.
pub const STRIDE: usize = 8;

impl BoundsState {
    /// Degenerate intervals at the point mass on `state`.
    pub fn indicator(state: &SystemState) -> Self {
        let m = MarginalVector::indicator(state);
        Self { lower: m.p.clone(), upper: m.p }
    }

    pub fn node_count(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self, i: usize, c: Compartment) -> f64 {
        self.lower[i][c.index()]
    }

    pub fn upper(&self, i: usize, c: Compartment) -> f64 {
        self.upper[i][c.index()]
    }

    /// Flat integrator layout, node by node.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(STRIDE * self.node_count());
        for (lo, up) in self.lower.iter().zip(&self.upper) {
            out.extend_from_slice(lo);
            out.extend_from_slice(up);
        }
        out
    }

    pub fn from_flat(x: &[f64]) -> Self {
        let (lower, upper) = x
            .chunks_exact(STRIDE)
            .map(|c| ([c[0], c[1], c[2], c[3]], [c[4], c[5], c[6], c[7]]))
            .unzip();
        Self { lower, upper }
    }

    /// Whether `m` lies in every interval, widened by `slack`.
    pub fn contains(&self, m: &MarginalVector, slack: f64) -> bool {
        self.first_excluded(m, slack).is_none()
    }

    /// First `(node, compartment)` whose marginal falls outside its interval.
    pub fn first_excluded(&self, m: &MarginalVector, slack: f64) -> Option<(usize, Compartment)> {
        for i in 0..self.node_count() {
            for c in Compartment::ALL {
                let x = m.get(i, c);
                if x < self.lower(i, c) - slack || x > self.upper(i, c) + slack {
                    return Some((i, c));
                }
            }
        }
        None
    }

    /// Whether every interval of `self` lies inside the matching interval of `outer`.
    pub fn nested_in(&self, outer: &BoundsState, slack: f64) -> bool {
        self.lower.iter().zip(&outer.lower).all(|(a, b)| a.iter().zip(b).all(|(x, y)| *x >= *y - slack))
            && self.upper.iter().zip(&outer.upper).all(|(a, b)| a.iter().zip(b).all(|(x, y)| *x <= *y + slack))
    }

    pub fn max_upper(&self) -> f64 {
        self.upper.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_lower(&self) -> f64 {
        self.lower.iter().flatten().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `sum_i upper_E + upper_I`, the direct bound on the expected number of
    /// exposed and infected nodes.
    pub fn sum_upper_exposed_infected(&self) -> f64 {
        self.upper.iter().map(|u| u[1] + u[2]).sum()
    }

    pub fn sum_lower_exposed_infected(&self) -> f64 {
        self.lower.iter().map(|l| l[1] + l[2]).sum()
    }
}

/// Tightest upper bound on the expected number of exposed and infected nodes
/// implied by the intervals: `sum_i min{up_E + up_I, 1 - lo_S - lo_V}`.
pub fn optimal_exposed_infected_upper(state: &BoundsState) -> f64 {
    state
        .lower
        .iter()
        .zip(&state.upper)
        .map(|(lo, up)| (up[1] + up[2]).min(1.0 - lo[0] - lo[3]).max(0.0))
        .sum()
}
