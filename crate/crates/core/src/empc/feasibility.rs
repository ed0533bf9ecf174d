use serde::{Deserialize, Serialize};

use super::action::{Action, ActionModel};
use super::config::ControllerConfig;
use crate::closure::{integrate_bounds_final, optimal_exposed_infected_upper, BoundsState, ClosureKind};
use crate::error::{Error, Result};
use crate::model::{SpreadingGraph, SpreadingParams, SystemState};

/// Outcome of checking one action from one observed state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSummary {
    /// Robust bound minus `ell(state) exp(-r dt)`; the action is feasible iff `<= 0`.
    pub margin: f64,
    /// Optimal robust upper bound on the expected exposed + infected count at `t + dt`.
    pub optimal_upper: f64,
    /// `sum_i upper_E + upper_I` at `t + dt`.
    pub sum_upper: f64,
    /// `sum_i lower_E + lower_I` at `t + dt`.
    pub sum_lower: f64,
}

impl BoundSummary {
    pub fn feasible(&self) -> bool {
        self.margin <= 0.0
    }
}

/// Integrates the refined bounds from the observed state over one sampling
/// interval under `action` and compares the optimal upper bound with the
/// required decay.
pub fn evaluate_action<M: ActionModel + ?Sized>(
    graph: &SpreadingGraph,
    model: &M,
    action: &Action,
    state: &SystemState,
    cfg: &ControllerConfig,
) -> Result<(BoundSummary, BoundsState)> {
    let params = model.apply(action)?;
    let bounds = integrate_bounds_final(ClosureKind::Refined, graph, &params, state, cfg.dt, cfg.step())?;
    let optimal_upper = optimal_exposed_infected_upper(&bounds);
    let target = state.exposed_infected_count() as f64 * (-cfg.r * cfg.dt).exp();
    let summary = BoundSummary {
        margin: optimal_upper - target,
        optimal_upper,
        sum_upper: bounds.sum_upper_exposed_infected(),
        sum_lower: bounds.sum_lower_exposed_infected(),
    };
    Ok((summary, bounds))
}

/// Robust stability-constraint value of `action` at `state`; feasible iff `<= 0`.
pub fn stability_margin<M: ActionModel + ?Sized>(
    graph: &SpreadingGraph,
    model: &M,
    action: &Action,
    state: &SystemState,
    cfg: &ControllerConfig,
) -> Result<f64> {
    evaluate_action(graph, model, action, state, cfg).map(|(s, _)| s.margin)
}

/// Quarantines exactly the exposed and infected nodes.
pub fn total_quarantine_policy(state: &SystemState) -> Action {
    Action::new(state.labels().iter().map(|c| c.is_diseased()).collect())
}

/// Smallest sampling interval for which total quarantine provably meets decay rate `r`:
/// `max_i [ln max(delta_i, eta_i) - ln |eta_i - delta_i|] / [min(delta_i, eta_i) - r]`.
pub fn min_sampling_interval(params: &SpreadingParams, r: f64) -> Result<f64> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::InvalidParameter(format!("decay rate {r} must be finite and non-negative")));
    }
    let mut worst = f64::NEG_INFINITY;
    for (i, (&delta, &eta)) in params.delta.iter().zip(&params.eta).enumerate() {
        if delta == eta {
            return Err(Error::Unsupported(format!("node {i}: delta = eta = {delta}; the interval bound needs distinct rates")));
        }
        let slowest = delta.min(eta);
        if r >= slowest {
            return Err(Error::InvalidParameter(format!("node {i}: r = {r} must be below min(delta, eta) = {slowest}")));
        }
        let value = (delta.max(eta).ln() - (eta - delta).abs().ln()) / (slowest - r);
        worst = worst.max(value);
    }
    Ok(worst)
}

/// Closed-form upper bounds of an isolated node under full quarantine,
/// returned as `(upper_E(t), upper_E(t) + upper_I(t))`.
pub fn analytic_quarantine_bounds(delta: f64, eta: f64, x_e0: f64, x_i0: f64, t: f64) -> Result<(f64, f64)> {
    if delta == eta {
        return Err(Error::Unsupported(format!("delta = eta = {delta} has no distinct-eigenvalue solution")));
    }
    let x_e = x_e0 * (-delta * t).exp();
    let sum = x_i0 * (-eta * t).exp() + eta / (eta - delta) * x_e0 * (-delta * t).exp()
        - delta / (eta - delta) * x_e0 * (-eta * t).exp();
    Ok((x_e, sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empc::QuarantineMap;
    use crate::graph::erdos_renyi;
    use crate::model::{Compartment, UniformRates};

    #[test]
    fn total_quarantine_examples() {
        assert_eq!(total_quarantine_policy(&SystemState::uniform(4, Compartment::S)), Action::none(4));
        assert_eq!(total_quarantine_policy(&SystemState::uniform(4, Compartment::I)), Action::all(4));
        assert_eq!(total_quarantine_policy(&"SEIV".parse().unwrap()), Action::new(vec![false, true, true, false]));
    }

    fn uniform_params(n: usize, delta: f64, eta: f64) -> SpreadingParams {
        let g = SpreadingGraph::empty(n).unwrap();
        SpreadingParams::uniform(&g, UniformRates { delta, eta, ..UniformRates::REFERENCE })
    }

    #[test]
    fn sampling_interval_reference_values() {
        let v = min_sampling_interval(&uniform_params(3, 1.25, 3.5), 0.07).unwrap();
        let expected = (3.5f64.ln() - 2.25f64.ln()) / (1.25 - 0.07);
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.3745).abs() < 1e-4, "{v}");
        assert!(v <= 0.375);
        let v = min_sampling_interval(&uniform_params(1, 1.0, 2.0), 0.0).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn sampling_interval_grows_without_bound_as_r_approaches_min_rate() {
        let p = uniform_params(1, 1.25, 3.5);
        let mut last = 0.0;
        for r in [0.0, 0.5, 1.0, 1.2, 1.24, 1.249, 1.2499999] {
            let v = min_sampling_interval(&p, r).unwrap();
            assert!(v > last);
            last = v;
        }
        assert!(last > 1e6);
    }

    #[test]
    fn sampling_interval_errors() {
        assert!(matches!(min_sampling_interval(&uniform_params(2, 2.0, 2.0), 0.1), Err(Error::Unsupported(_))));
        assert!(matches!(min_sampling_interval(&uniform_params(2, 1.25, 3.5), 1.25), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn analytic_bounds_examples() {
        let (_, sum) = analytic_quarantine_bounds(1.25, 3.5, 0.0, 1.0, 0.7).unwrap();
        assert!((sum - (-3.5f64 * 0.7).exp()).abs() < 1e-15);
        let (xe, sum) = analytic_quarantine_bounds(1.25, 3.5, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(xe, 1.0);
        assert!((sum - 1.0).abs() < 1e-15);
        assert!(analytic_quarantine_bounds(2.0, 2.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn analytic_bounds_match_integrated_closure() {
        let g = SpreadingGraph::empty(1).unwrap();
        let map = QuarantineMap::new(&g, SpreadingParams::uniform(&g, UniformRates::REFERENCE)).unwrap();
        let cfg = ControllerConfig::default();
        for (label, xe0, xi0) in [("E", 1.0, 0.0), ("I", 0.0, 1.0)] {
            let x0: SystemState = label.parse().unwrap();
            let (summary, bounds) = evaluate_action(&g, &map, &Action::all(1), &x0, &cfg).unwrap();
            let (xe, sum) = analytic_quarantine_bounds(1.25, 3.5, xe0, xi0, 0.375).unwrap();
            assert!((bounds.upper(0, Compartment::E) - xe).abs() < 1e-6);
            assert!((summary.sum_upper - sum).abs() < 1e-6);
        }
    }

    #[test]
    fn disease_free_margin_is_zero() {
        let g = erdos_renyi(8, 0.6, 1).unwrap();
        let map = QuarantineMap::new(&g, SpreadingParams::uniform(&g, UniformRates::REFERENCE)).unwrap();
        let x0: SystemState = "SSVVSVSV".parse().unwrap();
        for a in [Action::none(8), Action::all(8), Action::from_mask(8, 0b1010_0110)] {
            assert_eq!(stability_margin(&g, &map, &a, &x0, &ControllerConfig::default()).unwrap(), 0.0);
        }
    }

    #[test]
    fn isolated_infected_margin() {
        let g = SpreadingGraph::empty(1).unwrap();
        let cfg = ControllerConfig::default();
        for eta in [0.05, 3.5] {
            let p = SpreadingParams::uniform(&g, UniformRates { eta, ..UniformRates::REFERENCE });
            let map = QuarantineMap::new(&g, p).unwrap();
            let m = stability_margin(&g, &map, &Action::none(1), &"I".parse().unwrap(), &cfg).unwrap();
            let expected = (-eta * cfg.dt).exp() - (-cfg.r * cfg.dt).exp();
            assert!((m - expected).abs() < 1e-9, "{m} vs {expected}");
            assert_eq!(m <= 0.0, eta >= cfg.r);
        }
    }
}
