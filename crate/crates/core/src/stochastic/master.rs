//! Exact Kolmogorov forward equation on the joint `4^n` chain.
//!
//! Joint states are encoded base 4 with node 0 as the least significant
//! digit and digits `S = 0, E = 1, I = 2, V = 3`, so state
//! `sum_i digit(X_i) * 4^i`. The generator is stored row-compressed and
//! propagated with the shared fixed-step RK4 integrator.

use super::rates::{exposure_pressure, node_rates};
use crate::error::{Error, Result};
use crate::integrate::Rk4;
use crate::model::{Compartment, MarginalVector, SpreadingGraph, SpreadingParams, SystemState};

/// Largest graph the oracle accepts (`4^8 = 65_536` joint states).
pub const MAX_ORACLE_NODES: usize = 8;

/// Upper limit on `step * (largest exit rate)` for propagation substeps.
const STIFFNESS_CAP: f64 = 0.05;

pub fn encode(state: &SystemState) -> usize {
    state.labels().iter().rev().fold(0, |acc, c| acc * 4 + c.index())
}

pub fn decode(mut index: usize, n: usize) -> SystemState {
    let labels = (0..n)
        .map(|_| {
            let c = Compartment::from_index(index % 4).unwrap();
            index /= 4;
            c
        })
        .collect();
    SystemState::new(labels)
}

pub struct MasterEquation {
    n: usize,
    exit: Vec<f64>,
    row_start: Vec<usize>,
    targets: Vec<(u32, f64)>,
    max_exit: f64,
}

impl MasterEquation {
    pub fn new(graph: &SpreadingGraph, params: &SpreadingParams) -> Result<Self> {
        let n = graph.node_count();
        if n > MAX_ORACLE_NODES {
            return Err(Error::Capacity { n, max: MAX_ORACLE_NODES });
        }
        params.validate(graph)?;
        let size = 1usize << (2 * n);
        let mut exit = Vec::with_capacity(size);
        let mut row_start = Vec::with_capacity(size + 1);
        let mut targets = Vec::new();
        for s in 0..size {
            row_start.push(targets.len());
            let state = decode(s, n);
            let labels = state.labels();
            let mut out = 0.0;
            for i in 0..n {
                let c = labels[i];
                let pressure = if c == Compartment::S { exposure_pressure(graph, params, labels, i) } else { 0.0 };
                for (to, rate) in node_rates(params, i, c, pressure) {
                    if to != c && rate > 0.0 {
                        let place = 4usize.pow(i as u32);
                        let dest = s - c.index() * place + to.index() * place;
                        targets.push((dest as u32, rate));
                        out += rate;
                    }
                }
            }
            exit.push(out);
        }
        row_start.push(targets.len());
        let max_exit = exit.iter().cloned().fold(0.0, f64::max);
        Ok(Self { n, exit, row_start, targets, max_exit })
    }

    pub fn state_count(&self) -> usize {
        self.exit.len()
    }

    /// Point mass on `x0`.
    pub fn initial(&self, x0: &SystemState) -> Result<Vec<f64>> {
        x0.check_len(self.n)?;
        let mut p = vec![0.0; self.state_count()];
        p[encode(x0)] = 1.0;
        Ok(p)
    }

    fn rhs(&self, p: &[f64], dp: &mut [f64]) {
        for (s, d) in dp.iter_mut().enumerate() {
            *d = -self.exit[s] * p[s];
        }
        for s in 0..p.len() {
            let mass = p[s];
            if mass == 0.0 {
                continue;
            }
            for &(dest, rate) in &self.targets[self.row_start[s]..self.row_start[s + 1]] {
                dp[dest as usize] += rate * mass;
            }
        }
    }

    /// Advances the joint distribution `p` by `duration`.
    pub fn propagate(&self, p: &mut [f64], duration: f64) {
        if duration <= 0.0 || self.max_exit == 0.0 {
            return;
        }
        let steps = ((duration * self.max_exit / STIFFNESS_CAP).ceil() as usize).max(1);
        let h = duration / steps as f64;
        let mut rk = Rk4::new(p.len());
        let mut field = |x: &[f64], dx: &mut [f64]| self.rhs(x, dx);
        for _ in 0..steps {
            rk.step(p, h, &mut field);
        }
    }

    pub fn marginals(&self, p: &[f64]) -> MarginalVector {
        let mut m = MarginalVector::zeros(self.n);
        for (s, &mass) in p.iter().enumerate() {
            let mut idx = s;
            for row in m.p.iter_mut() {
                row[idx % 4] += mass;
                idx /= 4;
            }
        }
        m
    }

    /// `E[number of exposed and infected nodes]` under `p`.
    pub fn expected_exposed_infected(&self, p: &[f64]) -> f64 {
        p.iter()
            .enumerate()
            .map(|(s, &mass)| {
                let mut idx = s;
                let mut ell = 0;
                for _ in 0..self.n {
                    ell += matches!(idx % 4, 1 | 2) as usize;
                    idx /= 4;
                }
                mass * ell as f64
            })
            .sum()
    }
}

/// Exact marginals `E[X_i^C(t)]` at each of the sorted, non-negative `times`.
pub fn master_equation_marginals(
    graph: &SpreadingGraph,
    params: &SpreadingParams,
    x0: &SystemState,
    times: &[f64],
) -> Result<Vec<MarginalVector>> {
    if times.iter().any(|&t| !(t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("times must be sorted and non-negative".into()));
    }
    let me = MasterEquation::new(graph, params)?;
    let mut p = me.initial(x0)?;
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        me.propagate(&mut p, t - now);
        now = t;
        out.push(me.marginals(&p));
    }
    Ok(out)
}
