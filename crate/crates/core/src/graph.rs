//! Random contact-graph generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::SpreadingGraph;

/// Directed Erdős–Rényi graph: every ordered pair `(i, j)`, `i != j`, is an
/// edge independently with probability `p`. Deterministic in `seed`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<SpreadingGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("connection probability {p} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    SpreadingGraph::new(n, edges)
}
