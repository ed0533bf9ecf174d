//! Simulation, bounding and control of continuous-time SEIV epidemics on
//! directed contact graphs.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`], [`frechet`], [`graph`]: shared domain types and the
//!   Fréchet joint-probability operators.
//! * [`stochastic`]: exact Gillespie simulation of the jump process and an
//!   exact master-equation propagator on the full `4^n` joint chain.
//! * [`closure`]: the crude and refined Fréchet moment-closure bound
//!   dynamics and the optimal upper bound on the expected number of exposed
//!   and infected nodes.
//! * [`empc`]: the quarantine action model, stability-constraint check,
//!   total-quarantine auxiliary policy, multi-start local descent and the
//!   closed loop.
//! * [`analysis`]: closed-form convergence bounds and bootstrap statistics.

pub mod analysis;
pub mod closure;
pub mod empc;
pub mod error;
pub mod frechet;
pub mod graph;
pub mod integrate;
pub mod io;
pub mod model;
pub mod rng;
pub mod stochastic;

pub use error::{Error, Result};
pub use model::{Compartment, MarginalVector, SpreadingGraph, SpreadingParams, SystemState};
