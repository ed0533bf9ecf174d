use super::{BoundsState, ClosureKind, STRIDE};
use crate::error::{Error, Result};
use crate::frechet::{frechet_lower_raw as f_lo, frechet_upper_raw as f_up};
use crate::model::{SpreadingGraph, SpreadingParams};

// flat offsets within a node's block
const LS: usize = 0;
const LE: usize = 1;
const LI: usize = 2;
const LV: usize = 3;
const US: usize = 4;
const UE: usize = 5;
const UI: usize = 6;
const UV: usize = 7;

/// `min{1 - upper_self, y}`: caps an inflow into a bound by the bound's slack to one.
#[inline(always)]
pub fn complement_bound(upper_self: f64, y: f64) -> f64 {
    (1.0 - upper_self).min(y)
}

/// Vector field of the crude or refined bound system over the flat layout.
pub(crate) fn field(graph: &SpreadingGraph, params: &SpreadingParams, refined: bool, x: &[f64], dx: &mut [f64]) {
    for i in 0..graph.node_count() {
        let b = STRIDE * i;
        let (ls, le, li, lv) = (x[b + LS], x[b + LE], x[b + LI], x[b + LV]);
        let (us, ue, ui, uv) = (x[b + US], x[b + UE], x[b + UI], x[b + UV]);
        let (alpha, xi, delta, eta) = (params.alpha[i], params.xi[i], params.delta[i], params.eta[i]);

        // S-node arguments of the upper-E inflow; the refined system caps by 1 - up_E
        let us_for_e = if refined { complement_bound(ue, us) } else { us };

        let mut out_us = 0.0; // outflow bound used by up_S (smallest)
        let mut out_ls = 0.0; // outflow bound used by lo_S (largest)
        let mut in_ue = 0.0;
        let mut in_le = 0.0;
        for &(j, e) in graph.in_edges(i) {
            let bj = STRIDE * j;
            let (beta, gamma) = (params.beta[e], params.gamma[e]);
            if beta == 0.0 && gamma == 0.0 {
                continue;
            }
            let (lej, lij, uej, uij) = (x[bj + LE], x[bj + LI], x[bj + UE], x[bj + UI]);
            out_us += beta * f_lo(us, lej) + gamma * f_lo(us, lij);
            out_ls += beta * f_up(ls, uej) + gamma * f_up(ls, uij);
            in_ue += beta * f_up(us_for_e, uej) + gamma * f_up(us_for_e, uij);
            in_le += beta * f_lo(ls, lej) + gamma * f_lo(ls, lij);
        }

        dx[b + LS] = alpha * lv - xi * ls - out_ls;
        dx[b + LE] = in_le - delta * le;
        dx[b + LI] = delta * le - eta * li;
        dx[b + LV] = eta * li + xi * ls - alpha * lv;

        dx[b + UE] = in_ue - delta * ue;
        if refined {
            dx[b + US] = alpha * complement_bound(us, uv) - xi * us - out_us;
            dx[b + UI] = delta * complement_bound(ui, ue) - eta * ui;
            dx[b + UV] = eta * complement_bound(uv, ui) + xi * complement_bound(uv, us) - alpha * uv;
        } else {
            dx[b + US] = alpha * uv - xi * us - out_us;
            dx[b + UI] = delta * ue - eta * ui;
            dx[b + UV] = eta * ui + xi * us - alpha * uv;
        }
    }
}

/// Vector field of the chosen closure over the flat integrator layout
/// (`[lo_S, lo_E, lo_I, lo_V, up_S, up_E, up_I, up_V]` per node), for use
/// with [`integrate_with_field`](super::integrate_with_field).
pub fn bounds_field(kind: ClosureKind, graph: &SpreadingGraph, params: &SpreadingParams, x: &[f64], dx: &mut [f64]) {
    field(graph, params, kind == ClosureKind::Refined, x, dx)
}

fn rhs(graph: &SpreadingGraph, params: &SpreadingParams, state: &BoundsState, refined: bool) -> Result<BoundsState> {
    params.validate(graph)?;
    let n = graph.node_count();
    for (what, v) in [("lower bounds", &state.lower), ("upper bounds", &state.upper)] {
        if v.len() != n {
            return Err(Error::DimensionMismatch { what, expected: n, found: v.len() });
        }
    }
    let x = state.to_flat();
    let mut dx = vec![0.0; x.len()];
    field(graph, params, refined, &x, &mut dx);
    Ok(BoundsState::from_flat(&dx))
}

/// Time derivatives of every bound under the crude Fréchet closure.
pub fn crude_rhs(graph: &SpreadingGraph, params: &SpreadingParams, state: &BoundsState) -> Result<BoundsState> {
    rhs(graph, params, state, false)
}

/// Time derivatives of every bound under the refined closure.
pub fn refined_rhs(graph: &SpreadingGraph, params: &SpreadingParams, state: &BoundsState) -> Result<BoundsState> {
    rhs(graph, params, state, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::erdos_renyi;
    use crate::model::{Compartment, SystemState, UniformRates};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bounds<R: Rng>(n: usize, rng: &mut R) -> BoundsState {
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for _ in 0..n {
            let mut lo = [0.0; 4];
            let mut up = [0.0; 4];
            for c in 0..4 {
                let a: f64 = rng.gen();
                let b: f64 = rng.gen();
                lo[c] = a.min(b);
                up[c] = a.max(b);
            }
            lower.push(lo);
            upper.push(up);
        }
        BoundsState { lower, upper }
    }

    #[test]
    fn complement_bound_examples() {
        assert_eq!(complement_bound(1.0, 0.7), 0.0);
        assert_eq!(complement_bound(0.0, 0.7), 0.7);
        assert!((complement_bound(0.4, 0.9) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn all_v_is_a_fixed_point_without_alpha() {
        let g = erdos_renyi(4, 0.7, 1).unwrap();
        let mut p = SpreadingParams::uniform(&g, UniformRates::REFERENCE);
        p.alpha = vec![0.0; 4];
        let b = BoundsState::indicator(&SystemState::uniform(4, Compartment::V));
        for d in [crude_rhs(&g, &p, &b).unwrap(), refined_rhs(&g, &p, &b).unwrap()] {
            assert!(d.lower.iter().chain(&d.upper).flatten().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn isolated_exposed_node_decays_linearly() {
        let g = SpreadingGraph::empty(1).unwrap();
        let p = SpreadingParams::uniform(&g, UniformRates::REFERENCE);
        let b = BoundsState { lower: vec![[0.0, 0.4, 0.0, 0.0]], upper: vec![[0.0, 0.6, 0.0, 0.0]] };
        let d = crude_rhs(&g, &p, &b).unwrap();
        assert!((d.upper(0, Compartment::E) + 1.25 * 0.6).abs() < 1e-15);
        assert!((d.lower(0, Compartment::E) + 1.25 * 0.4).abs() < 1e-15);
    }

    #[test]
    fn crude_rhs_matches_hand_computation() {
        // node 0 has in-neighbor 1
        let g = SpreadingGraph::new(2, vec![(0, 1)]).unwrap();
        let mut p = SpreadingParams::uniform(&g, UniformRates::REFERENCE);
        p.beta = vec![0.7];
        p.gamma = vec![0.3];
        let b = BoundsState {
            lower: vec![[0.5, 0.1, 0.0, 0.1], [0.0, 0.6, 0.2, 0.0]],
            upper: vec![[0.8, 0.3, 0.1, 0.3], [0.1, 0.8, 0.4, 0.1]],
        };
        let d = crude_rhs(&g, &p, &b).unwrap();
        let (a, xi, de, et) = (0.1, 2.0, 1.25, 3.5);
        let up_s = a * 0.3 - xi * 0.8 - (0.7 * f_lo(0.8, 0.6) + 0.3 * f_lo(0.8, 0.2));
        let lo_s = a * 0.1 - xi * 0.5 - (0.7 * f_up(0.5, 0.8) + 0.3 * f_up(0.5, 0.4));
        let up_e = 0.7 * f_up(0.8, 0.8) + 0.3 * f_up(0.8, 0.4) - de * 0.3;
        let lo_e = 0.7 * f_lo(0.5, 0.6) + 0.3 * f_lo(0.5, 0.2) - de * 0.1;
        let up_v = et * 0.1 + xi * 0.8 - a * 0.3;
        for (got, want) in [
            (d.upper(0, Compartment::S), up_s),
            (d.lower(0, Compartment::S), lo_s),
            (d.upper(0, Compartment::E), up_e),
            (d.lower(0, Compartment::E), lo_e),
            (d.upper(0, Compartment::I), de * 0.3 - et * 0.1),
            (d.upper(0, Compartment::V), up_v),
        ] {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
    }

    #[test]
    fn saturated_upper_s_cannot_grow() {
        let g = erdos_renyi(4, 0.8, 2).unwrap();
        let p = SpreadingParams::uniform(&g, UniformRates::REFERENCE);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let mut b = random_bounds(4, &mut rng);
            b.upper[1][0] = 1.0;
            let d = refined_rhs(&g, &p, &b).unwrap();
            assert!(d.upper(1, Compartment::S) <= 0.0);
        }
    }

    #[test]
    fn refined_equals_crude_when_caps_inactive() {
        // small upper bounds leave every complement slack above every inflow argument
        let g = erdos_renyi(5, 0.6, 4).unwrap();
        let p = SpreadingParams::uniform(&g, UniformRates::REFERENCE);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let mut b = random_bounds(5, &mut rng);
            for (lo, up) in b.lower.iter_mut().zip(b.upper.iter_mut()) {
                for c in 0..4 {
                    up[c] *= 0.5;
                    lo[c] = lo[c].min(up[c]);
                }
            }
            assert_eq!(crude_rhs(&g, &p, &b).unwrap(), refined_rhs(&g, &p, &b).unwrap());
        }
    }

    #[test]
    fn dimension_mismatch() {
        let g = SpreadingGraph::empty(2).unwrap();
        let p = SpreadingParams::uniform(&g, UniformRates::REFERENCE);
        let b = BoundsState::indicator(&"S".parse().unwrap());
        assert!(matches!(crude_rhs(&g, &p, &b), Err(Error::DimensionMismatch { .. })));
    }
}
