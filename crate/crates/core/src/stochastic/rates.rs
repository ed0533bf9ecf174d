use crate::error::Result;
use crate::model::{Compartment, SpreadingGraph, SpreadingParams, SystemState};

/// Jump intensities of every node toward every compartment in the current state.
#[derive(Clone, Debug, PartialEq)]
pub struct RateTable {
    /// `rate[i][target.index()]`
    pub rate: Vec<[f64; 4]>,
}

impl RateTable {
    pub fn get(&self, i: usize, target: Compartment) -> f64 {
        self.rate[i][target.index()]
    }

    pub fn total(&self) -> f64 {
        self.rate.iter().flatten().sum()
    }
}

/// Sum of exposure rates acting on `i` from its exposed and infected in-neighbors.
#[inline]
pub(crate) fn exposure_pressure(
    graph: &SpreadingGraph,
    params: &SpreadingParams,
    labels: &[Compartment],
    i: usize,
) -> f64 {
    let mut total = 0.0;
    for &(j, e) in graph.in_edges(i) {
        match labels[j] {
            Compartment::E => total += params.beta[e],
            Compartment::I => total += params.gamma[e],
            _ => {}
        }
    }
    total
}

/// The `(target, rate)` pairs available to a node in compartment `c`.
#[inline]
pub(crate) fn node_rates(params: &SpreadingParams, i: usize, c: Compartment, pressure: f64) -> [(Compartment, f64); 2] {
    match c {
        Compartment::S => [(Compartment::E, pressure), (Compartment::V, params.xi[i])],
        Compartment::E => [(Compartment::I, params.delta[i]), (Compartment::E, 0.0)],
        Compartment::I => [(Compartment::V, params.eta[i]), (Compartment::I, 0.0)],
        Compartment::V => [(Compartment::S, params.alpha[i]), (Compartment::V, 0.0)],
    }
}

pub fn transition_rates(graph: &SpreadingGraph, params: &SpreadingParams, state: &SystemState) -> Result<RateTable> {
    params.validate(graph)?;
    state.check_len(graph.node_count())?;
    let labels = state.labels();
    let rate = (0..graph.node_count())
        .map(|i| {
            let c = labels[i];
            let pressure = if c == Compartment::S { exposure_pressure(graph, params, labels, i) } else { 0.0 };
            let mut row = [0.0; 4];
            for (target, r) in node_rates(params, i, c, pressure) {
                if target != c {
                    row[target.index()] += r;
                }
            }
            row
        })
        .collect();
    Ok(RateTable { rate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::UniformRates;

    #[test]
    fn exposed_node_only_progresses() {
        let g = SpreadingGraph::empty(1).unwrap();
        let p = SpreadingParams::uniform(&g, UniformRates::REFERENCE);
        let t = transition_rates(&g, &p, &"E".parse().unwrap()).unwrap();
        assert_eq!(t.rate[0], [0.0, 0.0, 1.25, 0.0]);
        assert_eq!(t.total(), 1.25);
    }

    #[test]
    fn no_pressure_without_diseased_neighbors() {
        let g = SpreadingGraph::new(3, vec![(0, 1), (0, 2)]).unwrap();
        let p = SpreadingParams::uniform(&g, UniformRates::REFERENCE);
        let t = transition_rates(&g, &p, &"SSV".parse().unwrap()).unwrap();
        assert_eq!(t.get(0, Compartment::E), 0.0);
        assert_eq!(t.get(0, Compartment::V), 2.0);
    }

    #[test]
    fn infected_in_neighbor_exposes() {
        // edge (0, 1): node 1 is an in-neighbor of node 0
        let g = SpreadingGraph::new(2, vec![(0, 1)]).unwrap();
        let p = SpreadingParams::uniform(&g, UniformRates::REFERENCE);
        let t = transition_rates(&g, &p, &"SI".parse().unwrap()).unwrap();
        assert!((t.get(0, Compartment::E) - 0.1).abs() < 1e-15);
        assert_eq!(t.get(1, Compartment::V), 3.5);
        // exposure does not flow against the edge direction
        let t = transition_rates(&g, &p, &"IS".parse().unwrap()).unwrap();
        assert_eq!(t.get(1, Compartment::E), 0.0);
    }

    #[test]
    fn heterogeneous_pressure_sums_beta_and_gamma() {
        let g = SpreadingGraph::new(3, vec![(0, 1), (0, 2)]).unwrap();
        let mut p = SpreadingParams::uniform(&g, UniformRates::REFERENCE);
        p.beta = vec![0.3, 0.5];
        p.gamma = vec![0.7, 1.1];
        let t = transition_rates(&g, &p, &"SEI".parse().unwrap()).unwrap();
        assert!((t.get(0, Compartment::E) - (0.3 + 1.1)).abs() < 1e-15);
    }

    #[test]
    fn mismatched_dimensions() {
        let g = SpreadingGraph::empty(2).unwrap();
        let p = SpreadingParams::uniform(&g, UniformRates::REFERENCE);
        assert!(transition_rates(&g, &p, &"SSS".parse().unwrap()).is_err());
    }
}
