use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::action::Action;
use super::feasibility::total_quarantine_policy;
use crate::error::Result;
use crate::model::SystemState;

/// Quarantine probability of an exposed or infected node in a random candidate.
pub const DISEASED_QUARANTINE_PROBABILITY: f64 = 0.9;
/// Quarantine probability of a susceptible or vaccinated node.
pub const HEALTHY_QUARANTINE_PROBABILITY: f64 = 0.1;

/// Independent per-node Bernoulli draw, biased towards quarantining E and I nodes.
pub fn sample_candidate_action<R: Rng + ?Sized>(state: &SystemState, rng: &mut R) -> Action {
    Action::new(
        state
            .labels()
            .iter()
            .map(|c| {
                let p = if c.is_diseased() { DISEASED_QUARANTINE_PROBABILITY } else { HEALTHY_QUARANTINE_PROBABILITY };
                rng.gen_bool(p)
            })
            .collect(),
    )
}

/// Margins already computed for the current observed state.
pub struct MarginCache<F> {
    margin: F,
    values: HashMap<Action, f64>,
    lookups: usize,
}

impl<F: FnMut(&Action) -> Result<f64>> MarginCache<F> {
    pub fn new(margin: F) -> Self {
        Self { margin, values: HashMap::new(), lookups: 0 }
    }

    pub fn margin(&mut self, action: &Action) -> Result<f64> {
        self.lookups += 1;
        if let Some(&m) = self.values.get(action) {
            return Ok(m);
        }
        let m = (self.margin)(action)?;
        self.values.insert(action.clone(), m);
        Ok(m)
    }

    pub fn feasible(&mut self, action: &Action) -> Result<bool> {
        Ok(self.margin(action)? <= 0.0)
    }

    /// Distinct actions actually evaluated.
    pub fn evaluations(&self) -> usize {
        self.values.len()
    }

    /// Feasibility queries, including cache hits.
    pub fn lookups(&self) -> usize {
        self.lookups
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentOutcome {
    pub action: Action,
    pub cost: f64,
    pub margin: f64,
    /// Whether total quarantine passed the robust check. When it fails and no
    /// sampled candidate is feasible, total quarantine is still returned.
    pub auxiliary_feasible: bool,
    pub auxiliary_cost: f64,
    /// Sampled candidates that were feasible and descended.
    pub local_minima: usize,
    pub samples: usize,
    /// Feasibility queries made by each descent, excluding the check of the sample itself.
    pub descent_queries: Vec<usize>,
    /// Distinct actions evaluated.
    pub evaluations: usize,
}

/// Removes quarantined nodes one at a time, in ascending index order, for as
/// long as the action stays feasible. Returns the local minimum and the
/// number of feasibility queries spent.
fn descend<F: FnMut(&Action) -> Result<f64>>(mut a: Action, cache: &mut MarginCache<F>) -> Result<(Action, usize)> {
    let mut queries = 0;
    'outer: loop {
        let quarantined: Vec<usize> = a.quarantined().collect();
        for i in quarantined {
            let next = a.without(i);
            queries += 1;
            if cache.feasible(&next)? {
                a = next;
                continue 'outer;
            }
        }
        return Ok((a, queries));
    }
}

/// Multi-start local descent over quarantine actions.
///
/// The candidate set starts with total quarantine of the exposed and infected
/// nodes. Each of the `k_max` rounds draws a random action, discards it when
/// infeasible and otherwise adds its local minimum. The cheapest feasible
/// candidate is returned, the earliest one on ties.
pub fn multistart_local_descent<C, F, R>(
    state: &SystemState,
    k_max: usize,
    cost: C,
    margin: F,
    rng: &mut R,
) -> Result<DescentOutcome>
where
    C: Fn(&Action) -> f64,
    F: FnMut(&Action) -> Result<f64>,
    R: Rng + ?Sized,
{
    let mut cache = MarginCache::new(margin);
    let auxiliary = total_quarantine_policy(state);
    let auxiliary_margin = cache.margin(&auxiliary)?;
    let auxiliary_feasible = auxiliary_margin <= 0.0;
    let auxiliary_cost = cost(&auxiliary);

    let mut best = (auxiliary.clone(), auxiliary_cost, auxiliary_margin);
    let mut have_feasible = auxiliary_feasible;
    let mut descent_queries = Vec::new();
    let mut local_minima = 0;
    for _ in 0..k_max {
        let sample = sample_candidate_action(state, rng);
        if !cache.feasible(&sample)? {
            continue;
        }
        let (a, queries) = descend(sample, &mut cache)?;
        descent_queries.push(queries);
        local_minima += 1;
        let c = cost(&a);
        if !have_feasible || c < best.1 {
            let m = cache.margin(&a)?;
            best = (a, c, m);
            have_feasible = true;
        }
    }

    Ok(DescentOutcome {
        action: best.0,
        cost: best.1,
        margin: best.2,
        auxiliary_feasible,
        auxiliary_cost,
        local_minima,
        samples: k_max,
        descent_queries,
        evaluations: cache.evaluations(),
    })
}
