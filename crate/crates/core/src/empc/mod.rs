//! Economic MPC for quarantine: at each sampling time choose the cheapest
//! action whose robust bound on the expected number of exposed and infected
//! nodes one interval ahead decays by `exp(-r dt)`.

mod action;
mod closed_loop;
mod config;
mod feasibility;
mod optimizer;

pub use action::{action_cost, apply_action, Action, ActionModel, QuarantineMap};
pub use closed_loop::{run_closed_loop, BoundTrace, ClosedLoopRecord, Decision, Policy};
pub use config::{ControllerConfig, IntegratorConfig};
pub use feasibility::{
    analytic_quarantine_bounds, evaluate_action, min_sampling_interval, stability_margin, total_quarantine_policy,
    BoundSummary,
};
pub use optimizer::{multistart_local_descent, sample_candidate_action, DescentOutcome, MarginCache};
