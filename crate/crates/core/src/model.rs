//! Graph, parameters and state types shared by every module.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Infection stage of a single node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Compartment {
    S,
    E,
    I,
    V,
}

impl Compartment {
    pub const ALL: [Compartment; 4] = [Compartment::S, Compartment::E, Compartment::I, Compartment::V];

    /// Position in `[S, E, I, V]`; also the base-4 digit used by the joint-chain encoding.
    #[inline]
    pub const fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub const fn symbol(self) -> char {
        match self {
            Compartment::S => 'S',
            Compartment::E => 'E',
            Compartment::I => 'I',
            Compartment::V => 'V',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'S' => Some(Compartment::S),
            'E' => Some(Compartment::E),
            'I' => Some(Compartment::I),
            'V' => Some(Compartment::V),
            _ => None,
        }
    }

    /// Exposed or infected.
    #[inline]
    pub const fn is_diseased(self) -> bool {
        matches!(self, Compartment::E | Compartment::I)
    }
}

impl fmt::Display for Compartment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Directed contact network. An edge `(i, j)` means `j` is an in-neighbor of
/// `i`: node `j` can expose node `i`.
///
/// Edges are kept sorted by `(i, j)`; an edge's position in that order is its
/// id, which keys the per-edge rates of [`SpreadingParams`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpreadingGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    /// `in_edges[i]` lists `(j, edge_id)` for every in-neighbor `j` of `i`.
    in_edges: Vec<Vec<(usize, usize)>>,
    /// `out_edges[j]` lists `(i, edge_id)` for every node `i` that `j` can expose.
    out_edges: Vec<Vec<(usize, usize)>>,
}

impl SpreadingGraph {
    pub fn new(n: usize, mut edges: Vec<(usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph must have at least one node".into()));
        }
        for &(i, j) in &edges {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at node {i}")));
            }
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", w[0].0, w[0].1)));
        }

        let mut in_edges = vec![Vec::new(); n];
        let mut out_edges = vec![Vec::new(); n];
        for (id, &(i, j)) in edges.iter().enumerate() {
            in_edges[i].push((j, id));
            out_edges[j].push((i, id));
        }
        Ok(Self { n, edges, in_edges, out_edges })
    }

    /// Graph with no edges.
    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, Vec::new())
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn in_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.in_edges[i].iter().map(|&(j, _)| j)
    }

    #[inline]
    pub fn in_edges(&self, i: usize) -> &[(usize, usize)] {
        &self.in_edges[i]
    }

    #[inline]
    pub fn out_edges(&self, j: usize) -> &[(usize, usize)] {
        &self.out_edges[j]
    }

    pub fn edge_id(&self, i: usize, j: usize) -> Option<usize> {
        self.edges.binary_search(&(i, j)).ok()
    }
}

/// Poisson transition rates of the SEIV process.
///
/// Node rates are indexed by node; `beta` and `gamma` are indexed by the edge
/// id of the associated [`SpreadingGraph`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreadingParams {
    /// V -> S
    pub alpha: Vec<f64>,
    /// S -> V
    pub xi: Vec<f64>,
    /// E -> I
    pub delta: Vec<f64>,
    /// I -> V
    pub eta: Vec<f64>,
    /// exposure of `i` by an exposed in-neighbor `j`
    pub beta: Vec<f64>,
    /// exposure of `i` by an infected in-neighbor `j`
    pub gamma: Vec<f64>,
}

/// Equal-valued rates, as used throughout the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformRates {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub eta: f64,
    pub xi: f64,
}

impl UniformRates {
    /// The rates of the reference quarantine experiment.
    pub const REFERENCE: UniformRates = UniformRates {
        alpha: 0.1,
        beta: 0.1,
        gamma: 0.1,
        delta: 1.25,
        eta: 3.5,
        xi: 2.0,
    };
}

impl SpreadingParams {
    pub fn uniform(graph: &SpreadingGraph, rates: UniformRates) -> Self {
        let n = graph.node_count();
        let m = graph.edge_count();
        Self {
            alpha: vec![rates.alpha; n],
            xi: vec![rates.xi; n],
            delta: vec![rates.delta; n],
            eta: vec![rates.eta; n],
            beta: vec![rates.beta; m],
            gamma: vec![rates.gamma; m],
        }
    }

    /// Checks lengths against `graph` and that every rate is finite and non-negative.
    pub fn validate(&self, graph: &SpreadingGraph) -> Result<()> {
        let n = graph.node_count();
        let m = graph.edge_count();
        let node_rates = [
            ("alpha", &self.alpha),
            ("xi", &self.xi),
            ("delta", &self.delta),
            ("eta", &self.eta),
        ];
        for (what, v) in node_rates {
            check_len(what, v, n)?;
        }
        check_len("beta", &self.beta, m)?;
        check_len("gamma", &self.gamma, m)?;

        let all = [
            ("alpha", &self.alpha),
            ("xi", &self.xi),
            ("delta", &self.delta),
            ("eta", &self.eta),
            ("beta", &self.beta),
            ("gamma", &self.gamma),
        ];
        for (what, v) in all {
            if let Some((k, x)) = v.iter().enumerate().find(|(_, x)| !x.is_finite() || **x < 0.0) {
                return Err(Error::InvalidParameter(format!("{what}[{k}] = {x} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.alpha.len()
    }
}

fn check_len(what: &'static str, v: &[f64], expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch { what, expected, found: v.len() });
    }
    Ok(())
}

/// One compartment label per node; the exact process state.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemState(Vec<Compartment>);

impl SystemState {
    pub fn new(labels: Vec<Compartment>) -> Self {
        Self(labels)
    }

    pub fn uniform(n: usize, c: Compartment) -> Self {
        Self(vec![c; n])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> Compartment {
        self.0[i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, c: Compartment) {
        self.0[i] = c;
    }

    pub fn labels(&self) -> &[Compartment] {
        &self.0
    }

    /// Number of exposed plus infected nodes.
    pub fn exposed_infected_count(&self) -> usize {
        self.0.iter().filter(|c| c.is_diseased()).count()
    }

    pub fn is_disease_free(&self) -> bool {
        !self.0.iter().any(|c| c.is_diseased())
    }

    pub fn count(&self, c: Compartment) -> usize {
        self.0.iter().filter(|&&x| x == c).count()
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::DimensionMismatch { what: "state", expected: n, found: self.len() });
        }
        Ok(())
    }
}

/// Number of exposed plus infected nodes of `state`.
pub fn exposed_infected_count(state: &SystemState) -> usize {
    state.exposed_infected_count()
}

impl fmt::Display for SystemState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.0 {
            write!(f, "{}", c.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for SystemState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| Compartment::from_symbol(c).ok_or_else(|| Error::Parse(format!("unknown compartment label {c:?}"))))
            .collect::<Result<Vec<_>>>()
            .map(SystemState)
    }
}

/// Per-node compartment probabilities `p[i][C]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalVector {
    pub p: Vec<[f64; 4]>,
}

impl MarginalVector {
    pub fn zeros(n: usize) -> Self {
        Self { p: vec![[0.0; 4]; n] }
    }

    /// Point mass on `state`.
    pub fn indicator(state: &SystemState) -> Self {
        let p = state
            .labels()
            .iter()
            .map(|c| {
                let mut row = [0.0; 4];
                row[c.index()] = 1.0;
                row
            })
            .collect();
        Self { p }
    }

    pub fn node_count(&self) -> usize {
        self.p.len()
    }

    #[inline]
    pub fn get(&self, i: usize, c: Compartment) -> f64 {
        self.p[i][c.index()]
    }

    /// Expected number of exposed plus infected nodes.
    pub fn expected_exposed_infected(&self) -> f64 {
        self.p.iter().map(|row| row[1] + row[2]).sum()
    }

    /// Every entry in `[0, 1]` and every row summing to one, within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for (i, row) in self.p.iter().enumerate() {
            if let Some(&x) = row.iter().find(|&&x| !(-tol..=1.0 + tol).contains(&x)) {
                return Err(Error::InvalidProbability { value: x });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::Parse(format!("node {i}: marginals sum to {sum}")));
            }
        }
        Ok(())
    }
}
