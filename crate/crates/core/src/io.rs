//! Network document: graph plus spreading parameters as one JSON object.
//!
//! ```json
//! { "n": 3, "edges": [[0, 1], [1, 2]],
//!   "alpha": [..], "xi": [..], "delta": [..], "eta": [..],
//!   "beta": {"0,1": 0.1, "1,2": 0.1}, "gamma": {"0,1": 0.1, "1,2": 0.1} }
//! ```
//!
//! Node indices are 0-based. Per-edge maps must be keyed exactly by the edge set.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SpreadingGraph, SpreadingParams};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    pub alpha: Vec<f64>,
    pub xi: Vec<f64>,
    pub delta: Vec<f64>,
    pub eta: Vec<f64>,
    pub beta: BTreeMap<String, f64>,
    pub gamma: BTreeMap<String, f64>,
}

fn edge_key(i: usize, j: usize) -> String {
    format!("{i},{j}")
}

fn parse_edge_key(key: &str) -> Result<(usize, usize)> {
    let bad = || Error::Parse(format!("edge key {key:?} is not of the form \"i,j\""));
    let (a, b) = key.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

impl NetworkDocument {
    pub fn from_parts(graph: &SpreadingGraph, params: &SpreadingParams) -> Self {
        let keyed = |v: &[f64]| {
            graph
                .edges()
                .iter()
                .zip(v)
                .map(|(&(i, j), &x)| (edge_key(i, j), x))
                .collect::<BTreeMap<_, _>>()
        };
        Self {
            n: graph.node_count(),
            edges: graph.edges().iter().map(|&(i, j)| [i, j]).collect(),
            alpha: params.alpha.clone(),
            xi: params.xi.clone(),
            delta: params.delta.clone(),
            eta: params.eta.clone(),
            beta: keyed(&params.beta),
            gamma: keyed(&params.gamma),
        }
    }

    pub fn into_parts(self) -> Result<(SpreadingGraph, SpreadingParams)> {
        let graph = SpreadingGraph::new(self.n, self.edges.iter().map(|e| (e[0], e[1])).collect())?;
        let per_edge = |what: &str, map: &BTreeMap<String, f64>| -> Result<Vec<f64>> {
            let mut out = vec![f64::NAN; graph.edge_count()];
            for (key, &x) in map {
                let (i, j) = parse_edge_key(key)?;
                let id = graph
                    .edge_id(i, j)
                    .ok_or_else(|| Error::Parse(format!("{what} entry {key:?} is not an edge")))?;
                out[id] = x;
            }
            if let Some(id) = out.iter().position(|x| x.is_nan()) {
                let (i, j) = graph.edges()[id];
                return Err(Error::Parse(format!("{what} is missing edge \"{i},{j}\"")));
            }
            Ok(out)
        };
        let params = SpreadingParams {
            beta: per_edge("beta", &self.beta)?,
            gamma: per_edge("gamma", &self.gamma)?,
            alpha: self.alpha,
            xi: self.xi,
            delta: self.delta,
            eta: self.eta,
        };
        params.validate(&graph)?;
        Ok((graph, params))
    }
}

pub fn read_network(path: &Path) -> Result<(SpreadingGraph, SpreadingParams)> {
    let text = std::fs::read_to_string(path)?;
    let doc: NetworkDocument = serde_json::from_str(&text)?;
    doc.into_parts()
}

pub fn write_network(path: &Path, graph: &SpreadingGraph, params: &SpreadingParams) -> Result<()> {
    let doc = NetworkDocument::from_parts(graph, params);
    std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}
