use rand::Rng;
use rayon::prelude::*;

use super::gillespie::{simulate_path, ParamsSchedule};
use crate::error::{Error, Result};
use crate::model::{MarginalVector, SpreadingGraph, SystemState};
use crate::rng::{stream, Purpose};

/// Empirical compartment frequencies with per-entry standard errors.
#[derive(Clone, Debug)]
pub struct MonteCarloMarginals {
    pub marginals: Vec<MarginalVector>,
    pub std_errors: Vec<MarginalVector>,
    pub trials: usize,
}

/// Estimates marginals at `times` from `trials` independent sample paths.
///
/// One seed is drawn from `rng`; trial `k` then runs on its own stream, so
/// the result does not depend on how trials are scheduled across workers.
pub fn monte_carlo_marginals<R: Rng + ?Sized>(
    graph: &SpreadingGraph,
    schedule: &ParamsSchedule,
    x0: &SystemState,
    times: &[f64],
    trials: usize,
    rng: &mut R,
) -> Result<MonteCarloMarginals> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if times.iter().any(|&t| !(t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("times must be sorted and non-negative".into()));
    }
    x0.check_len(graph.node_count())?;
    schedule.validate(graph)?;
    let root = rng.next_u64();
    let horizon = times.last().copied().unwrap_or(0.0);
    let n = graph.node_count();

    let counts = (0..trials as u64)
        .into_par_iter()
        .map(|k| -> Result<Vec<Vec<[u32; 4]>>> {
            let states = if horizon > 0.0 {
                let mut r = stream(root, Purpose::Simulation, k);
                simulate_path(graph, schedule, x0, horizon, &mut r)?.states_at(times)
            } else {
                vec![x0.clone(); times.len()]
            };
            Ok(states
                .iter()
                .map(|s| {
                    s.labels()
                        .iter()
                        .map(|c| {
                            let mut row = [0u32; 4];
                            row[c.index()] = 1;
                            row
                        })
                        .collect()
                })
                .collect())
        })
        .try_reduce(
            || vec![vec![[0u32; 4]; n]; times.len()],
            |mut acc, other| {
                for (a, b) in acc.iter_mut().zip(&other) {
                    for (ra, rb) in a.iter_mut().zip(b) {
                        for c in 0..4 {
                            ra[c] += rb[c];
                        }
                    }
                }
                Ok(acc)
            },
        )?;

    let m = trials as f64;
    let mut marginals = Vec::with_capacity(times.len());
    let mut std_errors = Vec::with_capacity(times.len());
    for per_time in &counts {
        let mut mean = MarginalVector::zeros(n);
        let mut se = MarginalVector::zeros(n);
        for (i, row) in per_time.iter().enumerate() {
            for c in 0..4 {
                let p = row[c] as f64 / m;
                mean.p[i][c] = p;
                se.p[i][c] = if trials > 1 { (p * (1.0 - p) / (m - 1.0)).sqrt() } else { 0.0 };
            }
        }
        marginals.push(mean);
        std_errors.push(se);
    }
    Ok(MonteCarloMarginals { marginals, std_errors, trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::erdos_renyi;
    use crate::model::{Compartment, SpreadingParams, UniformRates};
    use crate::stochastic::master_equation_marginals;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_trial_gives_indicators() {
        let g = erdos_renyi(6, 0.5, 2).unwrap();
        let schedule = ParamsSchedule::constant(SpreadingParams::uniform(&g, UniformRates::REFERENCE));
        let x0: SystemState = "IESSVS".parse().unwrap();
        let times = [0.0, 0.5, 2.0];
        let mc = monte_carlo_marginals(&g, &schedule, &x0, &times, 1, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        for m in &mc.marginals {
            for row in &m.p {
                assert_eq!(row.iter().filter(|&&x| x == 1.0).count(), 1);
                assert_eq!(row.iter().sum::<f64>(), 1.0);
            }
        }
    }

    #[test]
    fn absorbing_all_v() {
        let g = erdos_renyi(4, 0.5, 2).unwrap();
        let mut p = SpreadingParams::uniform(&g, UniformRates::REFERENCE);
        p.alpha = vec![0.0; 4];
        let mc = monte_carlo_marginals(
            &g,
            &ParamsSchedule::constant(p),
            &SystemState::uniform(4, Compartment::V),
            &[0.0, 1.0, 10.0],
            50,
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        for m in &mc.marginals {
            assert!(m.p.iter().all(|row| row[3] == 1.0));
        }
    }

    #[test]
    fn agrees_with_master_equation() {
        let g = erdos_renyi(3, 0.8, 17).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut p = SpreadingParams::uniform(&g, UniformRates::REFERENCE);
        for v in [&mut p.alpha, &mut p.xi, &mut p.delta, &mut p.eta, &mut p.beta, &mut p.gamma] {
            for x in v.iter_mut() {
                *x = rng.gen_range(0.05..3.5);
            }
        }
        let x0: SystemState = "ISE".parse().unwrap();
        let times = [0.25, 1.0, 2.0];
        let exact = master_equation_marginals(&g, &p, &x0, &times).unwrap();
        let mc = monte_carlo_marginals(&g, &ParamsSchedule::constant(p), &x0, &times, 20_000, &mut rng).unwrap();
        for k in 0..times.len() {
            for i in 0..3 {
                for c in 0..4 {
                    let (e, m) = (exact[k].p[i][c], mc.marginals[k].p[i][c]);
                    // binomial standard error under the exact probability
                    let se = (e * (1.0 - e) / 20_000.0).sqrt();
                    assert!((e - m).abs() <= 4.0 * se + 1e-9, "t={} i={i} c={c}: exact {e} mc {m} se {se}", times[k]);
                }
            }
        }
    }

    #[test]
    fn zero_trials_rejected() {
        let g = SpreadingGraph::empty(1).unwrap();
        let s = ParamsSchedule::constant(SpreadingParams::uniform(&g, UniformRates::REFERENCE));
        assert!(monte_carlo_marginals(&g, &s, &"S".parse().unwrap(), &[1.0], 0, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
