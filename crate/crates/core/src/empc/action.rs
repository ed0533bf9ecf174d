use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SpreadingGraph, SpreadingParams};

/// Binary quarantine vector; `true` removes the node's outgoing edges.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action(Vec<bool>);

impl Action {
    pub fn new(quarantined: Vec<bool>) -> Self {
        Self(quarantined)
    }

    pub fn none(n: usize) -> Self {
        Self(vec![false; n])
    }

    pub fn all(n: usize) -> Self {
        Self(vec![true; n])
    }

    /// Decodes the low `n` bits of `mask`, node 0 in bit 0.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        Self((0..n).map(|i| mask >> i & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn is_quarantined(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, quarantined: bool) {
        self.0[i] = quarantined;
    }

    pub fn quarantined(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &q)| q).map(|(i, _)| i)
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&q| q).count()
    }

    /// `self - e_i`
    pub fn without(&self, i: usize) -> Self {
        let mut a = self.clone();
        a.0[i] = false;
        a
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &q in &self.0 {
            write!(f, "{}", q as u8)?;
        }
        Ok(())
    }
}

/// How an action changes the spreading parameters, and what it costs.
pub trait ActionModel: Sync {
    fn apply(&self, action: &Action) -> Result<SpreadingParams>;
    fn cost(&self, action: &Action) -> f64;
}

/// Quarantine removes every outgoing edge of a quarantined node:
/// `beta_ij = base_beta_ij (1 - a_j)`, and likewise for `gamma`.
#[derive(Clone, Debug)]
pub struct QuarantineMap {
    graph: SpreadingGraph,
    base: SpreadingParams,
}

impl QuarantineMap {
    pub fn new(graph: &SpreadingGraph, base: SpreadingParams) -> Result<Self> {
        base.validate(graph)?;
        Ok(Self { graph: graph.clone(), base })
    }

    pub fn base_params(&self) -> &SpreadingParams {
        &self.base
    }

    pub fn graph(&self) -> &SpreadingGraph {
        &self.graph
    }
}

impl ActionModel for QuarantineMap {
    fn apply(&self, action: &Action) -> Result<SpreadingParams> {
        let n = self.graph.node_count();
        if action.len() != n {
            return Err(Error::DimensionMismatch { what: "action", expected: n, found: action.len() });
        }
        let mut p = self.base.clone();
        for (id, &(_, j)) in self.graph.edges().iter().enumerate() {
            if action.is_quarantined(j) {
                p.beta[id] = 0.0;
                p.gamma[id] = 0.0;
            }
        }
        Ok(p)
    }

    fn cost(&self, action: &Action) -> f64 {
        action_cost(action)
    }
}

pub fn apply_action(map: &QuarantineMap, action: &Action) -> Result<SpreadingParams> {
    map.apply(action)
}

/// Number of quarantined nodes.
pub fn action_cost(action: &Action) -> f64 {
    action.count() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::erdos_renyi;
    use crate::model::UniformRates;

    fn map() -> QuarantineMap {
        let g = erdos_renyi(6, 0.6, 5).unwrap();
        let p = SpreadingParams::uniform(&g, UniformRates::REFERENCE);
        QuarantineMap::new(&g, p).unwrap()
    }

    #[test]
    fn identity_action() {
        let m = map();
        assert_eq!(apply_action(&m, &Action::none(6)).unwrap(), *m.base_params());
    }

    #[test]
    fn full_quarantine_zeroes_exposure() {
        let m = map();
        let p = apply_action(&m, &Action::all(6)).unwrap();
        assert!(p.beta.iter().chain(&p.gamma).all(|&x| x == 0.0));
        assert_eq!(p.delta, m.base_params().delta);
        assert_eq!(p.alpha, m.base_params().alpha);
    }

    #[test]
    fn single_node_removes_only_its_outgoing_edges() {
        let m = map();
        let mut a = Action::none(6);
        a.set(2, true);
        let p = apply_action(&m, &a).unwrap();
        for (id, &(_, j)) in m.graph().edges().iter().enumerate() {
            if j == 2 {
                assert_eq!((p.beta[id], p.gamma[id]), (0.0, 0.0));
            } else {
                assert_eq!(p.beta[id], m.base_params().beta[id]);
                assert_eq!(p.gamma[id], m.base_params().gamma[id]);
            }
        }
    }

    #[test]
    fn cost_examples() {
        assert_eq!(action_cost(&Action::none(5)), 0.0);
        assert_eq!(action_cost(&Action::all(200)), 200.0);
        assert_eq!(action_cost(&Action::from_mask(5, 0b01000)), 1.0);
    }

    #[test]
    fn wrong_length_rejected() {
        assert!(map().apply(&Action::none(3)).is_err());
    }
}
