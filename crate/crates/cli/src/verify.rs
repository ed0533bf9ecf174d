//! Oracle verification suites on small random instances. Every failure names
//! the violated property and the instance seed.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use seiv_core::analysis::{elimination_time_bound, survival_bound};
use seiv_core::closure::{
    bounds_field, integrate_bounds, integrate_with_field, optimal_exposed_infected_upper, BoundsState,
    BoundsTrajectory, ClosureKind, IntegrationSettings, STRIDE,
};
use seiv_core::empc::{
    evaluate_action, run_closed_loop, total_quarantine_policy, Action, ActionModel, ControllerConfig, IntegratorConfig,
    Policy, QuarantineMap,
};
use seiv_core::graph::erdos_renyi;
use seiv_core::model::{Compartment, SpreadingGraph, SpreadingParams, SystemState, UniformRates};
use seiv_core::rng::{stream, Purpose};
use seiv_core::stochastic::MasterEquation;

use crate::config::{ScenarioConfig, VerifySection};
use crate::error::{CliError, CliResult};
use crate::output::OutputDir;

/// Instance-index offsets keep the suites on disjoint verification streams.
const SWEEP_OFFSET: u64 = 1 << 20;
const LP_OFFSET: u64 = 2 << 20;
const SOUNDNESS_OFFSET: u64 = 3 << 20;
const SURVIVAL_OFFSET: u64 = 4 << 20;

/// Agreement required between the closed-form and the enumerated LP optimum.
pub const LP_TOLERANCE: f64 = 1e-12;
/// Binomial standard errors allowed above the survival bound.
pub const SURVIVAL_SIGMAS: f64 = 3.0;

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub checks: usize,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

impl SuiteResult {
    fn new(name: &str) -> Self {
        Self { name: name.into(), checks: 0, failures: Vec::new(), notes: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checks > 0
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(msg());
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub root_seed: u64,
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.name == name)
    }
}

/// A random oracle-sized instance.
pub struct Instance {
    pub seed: u64,
    pub graph: SpreadingGraph,
    pub params: SpreadingParams,
    pub x0: SystemState,
}

pub fn random_instance(root: u64, index: u64, v: &VerifySection) -> CliResult<Instance> {
    let mut rng = stream(root, Purpose::Verification, index);
    let n = rng.gen_range(v.n_min..=v.n_max);
    let graph = erdos_renyi(n, v.edge_probability, rng.gen())?;
    let mut rate = |rng: &mut ChaCha8Rng| rng.gen_range(v.rate_min..=v.rate_max);
    let node = |rng: &mut ChaCha8Rng, rate: &mut dyn FnMut(&mut ChaCha8Rng) -> f64| (0..n).map(|_| rate(rng)).collect();
    let edge = |rng: &mut ChaCha8Rng, rate: &mut dyn FnMut(&mut ChaCha8Rng) -> f64| {
        (0..graph.edge_count()).map(|_| rate(rng)).collect()
    };
    let params = SpreadingParams {
        alpha: node(&mut rng, &mut rate),
        xi: node(&mut rng, &mut rate),
        delta: node(&mut rng, &mut rate),
        eta: node(&mut rng, &mut rate),
        beta: edge(&mut rng, &mut rate),
        gamma: edge(&mut rng, &mut rate),
    };
    let x0 = SystemState::new((0..n).map(|_| Compartment::ALL[rng.gen_range(0..4)]).collect());
    Ok(Instance { seed: index, graph, params, x0 })
}

/// Exact marginals on the trajectory's time grid.
fn exact_on_grid(inst: &Instance, times: &[f64]) -> CliResult<Vec<seiv_core::MarginalVector>> {
    let me = MasterEquation::new(&inst.graph, &inst.params)?;
    let mut p = me.initial(&inst.x0)?;
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        me.propagate(&mut p, t - now);
        now = t;
        out.push(me.marginals(&p));
    }
    Ok(out)
}

/// Refined field with the exposure inflow into `upper_I` removed.
fn corrupted_refined(inst: &Instance, horizon: f64, step: f64) -> seiv_core::Result<BoundsTrajectory> {
    let mut traj = BoundsTrajectory { times: Vec::new(), states: Vec::new() };
    integrate_with_field(
        &BoundsState::indicator(&inst.x0),
        horizon,
        IntegrationSettings::for_kind(ClosureKind::Refined, step),
        |x, dx| {
            bounds_field(ClosureKind::Refined, &inst.graph, &inst.params, x, dx);
            for (i, eta) in inst.params.eta.iter().enumerate() {
                dx[STRIDE * i + 6] = -eta * x[STRIDE * i + 6];
            }
        },
        |t, x| {
            traj.times.push(t);
            traj.states.push(BoundsState::from_flat(x));
        },
    )?;
    Ok(traj)
}

/// Containment of the exact marginals, nesting of refined in crude, and unit-interval boundedness.
pub fn containment_and_nesting(cfg: &ScenarioConfig) -> CliResult<(SuiteResult, SuiteResult)> {
    let v = &cfg.verify;
    let step = cfg.controller.dt / v.step_divisor as f64;
    let mut contain = SuiteResult::new("containment");
    let mut nest = SuiteResult::new("nesting");
    for k in 0..v.instances as u64 {
        let inst = random_instance(cfg.root_seed(), k, v)?;
        let crude = integrate_bounds(ClosureKind::Crude, &inst.graph, &inst.params, &inst.x0, v.horizon, step);
        let refined = if v.inject_fault {
            corrupted_refined(&inst, v.horizon, step)
        } else {
            integrate_bounds(ClosureKind::Refined, &inst.graph, &inst.params, &inst.x0, v.horizon, step)
        };
        let (crude, refined) = match (crude, refined) {
            (Ok(c), Ok(r)) => (c, r),
            (c, r) => {
                let err = c.err().or(r.err()).unwrap();
                contain.check(false, || format!("seed {k}: bound integration failed: {err}"));
                continue;
            }
        };
        let exact = exact_on_grid(&inst, &refined.times)?;
        for (label, tr) in [("crude", &crude), ("refined", &refined)] {
            let bad = tr.times.iter().zip(&tr.states).zip(&exact).find_map(|((t, b), m)| {
                b.first_excluded(m, v.slack).map(|(i, c)| (*t, i, c, m.get(i, c), b.lower(i, c), b.upper(i, c)))
            });
            contain.check(bad.is_none(), || {
                let (t, i, c, p, lo, up) = bad.unwrap();
                format!("seed {k}: {label} bounds exclude exact P(X_{i} = {}) = {p} from [{lo}, {up}] at t = {t}", c.symbol())
            });
        }
        let bad = crude.states.iter().zip(&refined.states).position(|(c, r)| !r.nested_in(c, v.slack));
        nest.check(bad.is_none(), || format!("seed {k}: refined not inside crude at t = {}", refined.times[bad.unwrap()]));
        let bad = refined.states.iter().position(|r| r.min_lower() < -v.slack || r.max_upper() > 1.0 + v.slack);
        nest.check(bad.is_none(), || format!("seed {k}: refined bound leaves [0, 1] at t = {}", refined.times[bad.unwrap()]));
    }
    Ok((contain, nest))
}

/// Seeds searched for a crude upper bound above one.
pub fn crude_overshoot(cfg: &ScenarioConfig) -> CliResult<SuiteResult> {
    let v = &cfg.verify;
    let step = cfg.controller.dt / v.step_divisor as f64;
    let mut suite = SuiteResult::new("crude_overshoot");
    let mut found = None;
    for k in 0..v.sweep_seeds as u64 {
        let inst = random_instance(cfg.root_seed(), SWEEP_OFFSET + k, v)?;
        if let Ok(tr) = integrate_bounds(ClosureKind::Crude, &inst.graph, &inst.params, &inst.x0, v.horizon, step) {
            let max = tr.states.iter().map(|s| s.max_upper()).fold(f64::NEG_INFINITY, f64::max);
            if max > 1.0 {
                found = Some((SWEEP_OFFSET + k, max));
                break;
            }
        }
    }
    suite.check(found.is_some(), || format!("no crude upper bound above 1 in {} seeds", v.sweep_seeds));
    if let Some((seed, max)) = found {
        suite.notes.push(format!("seed {seed}: crude upper bound reaches {max}"));
    }
    Ok(suite)
}

/// Maximum of `y_E + y_I` over `lo <= y <= up`, `sum y = 1`, by enumerating
/// the vertices of the box cut by the hyperplane. `None` when infeasible.
pub fn lp_vertex_optimum(lo: &[f64; 4], up: &[f64; 4]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for free in 0..4 {
        for mask in 0..8u32 {
            let mut y = [0.0; 4];
            let mut bit = 0;
            for c in 0..4 {
                if c != free {
                    y[c] = if mask >> bit & 1 == 1 { up[c] } else { lo[c] };
                    bit += 1;
                }
            }
            let rest: f64 = (0..4).filter(|&c| c != free).map(|c| y[c]).sum();
            y[free] = 1.0 - rest;
            let tol = 1e-12;
            if y[free] >= lo[free] - tol && y[free] <= up[free] + tol {
                let v = y[1] + y[2];
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
    }
    best
}

/// A random bound state whose every node admits a probability vector.
pub fn random_feasible_bounds<R: Rng + ?Sized>(n: usize, rng: &mut R) -> BoundsState {
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for _ in 0..n {
        let mut w: [f64; 4] = std::array::from_fn(|_| -rng.gen::<f64>().ln());
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        lower.push(std::array::from_fn(|c| (w[c] - rng.gen::<f64>() * w[c]).max(0.0)));
        upper.push(std::array::from_fn(|c| (w[c] + rng.gen::<f64>() * (1.0 - w[c])).min(1.0)));
    }
    BoundsState { lower, upper }
}

pub fn lp_equivalence(cfg: &ScenarioConfig) -> SuiteResult {
    let mut suite = SuiteResult::new("lp_equivalence");
    for k in 0..cfg.verify.lp_samples as u64 {
        let mut rng = stream(cfg.root_seed(), Purpose::Verification, LP_OFFSET + k);
        let n = rng.gen_range(1..=5);
        let b = random_feasible_bounds(n, &mut rng);
        let closed = optimal_exposed_infected_upper(&b);
        let enumerated: Option<f64> = (0..n).map(|i| lp_vertex_optimum(&b.lower[i], &b.upper[i])).sum();
        suite.check(enumerated.is_some_and(|e| (e - closed).abs() <= LP_TOLERANCE), || {
            format!("sample {k}: closed form {closed} vs enumeration {enumerated:?}")
        });
        suite.check(closed <= b.sum_upper_exposed_infected() + LP_TOLERANCE, || {
            format!("sample {k}: optimal bound {closed} above the plain sum {}", b.sum_upper_exposed_infected())
        });
    }
    suite
}

/// Robust bound against the exact conditional expectation one interval ahead.
pub fn feasibility_soundness(cfg: &ScenarioConfig) -> CliResult<SuiteResult> {
    let v = &cfg.verify;
    let ctl = ControllerConfig { integrator: IntegratorConfig { step_divisor: v.step_divisor }, ..cfg.controller.clone() };
    let mut suite = SuiteResult::new("feasibility_soundness");
    let mut feasible = 0;
    for k in 0..v.soundness_cases as u64 {
        let inst = random_instance(cfg.root_seed(), SOUNDNESS_OFFSET + k, v)?;
        let n = inst.graph.node_count();
        let map = QuarantineMap::new(&inst.graph, inst.params.clone())?;
        let mut rng = stream(cfg.root_seed(), Purpose::Verification, SOUNDNESS_OFFSET + k);
        let random = Action::new((0..n).map(|_| rng.gen_bool(0.5)).collect());
        for a in [random, total_quarantine_policy(&inst.x0), Action::none(n)] {
            let (summary, _) = evaluate_action(&inst.graph, &map, &a, &inst.x0, &ctl)?;
            let me = MasterEquation::new(&inst.graph, &map.apply(&a)?)?;
            let mut p = me.initial(&inst.x0)?;
            me.propagate(&mut p, ctl.dt);
            let exact = me.expected_exposed_infected(&p);
            suite.check(exact <= summary.optimal_upper + v.slack, || {
                format!("seed {}: action {a}: exact {exact} above robust bound {}", inst.seed, summary.optimal_upper)
            });
            if summary.margin <= 0.0 {
                feasible += 1;
                let target = inst.x0.exposed_infected_count() as f64 * (-ctl.r * ctl.dt).exp();
                suite.check(exact <= target + v.slack, || {
                    format!("seed {}: action {a} deemed feasible but exact {exact} exceeds {target}", inst.seed)
                });
            }
        }
    }
    suite.notes.push(format!("{feasible} feasible actions checked against the decay target"));
    Ok(suite)
}

/// Closed-loop survival frequencies and mean elimination time on a small instance.
pub fn survival(cfg: &ScenarioConfig) -> CliResult<SuiteResult> {
    let v = &cfg.verify;
    let ctl = cfg.controller.clone();
    let mut suite = SuiteResult::new("survival_bound");
    let mut rng = stream(cfg.root_seed(), Purpose::Verification, SURVIVAL_OFFSET);
    let graph = erdos_renyi(v.survival_n, 0.6, rng.gen())?;
    let map = QuarantineMap::new(&graph, SpreadingParams::uniform(&graph, UniformRates::REFERENCE))?;
    let x0 = SystemState::uniform(v.survival_n, Compartment::I);
    let ell0 = v.survival_n;
    let m = v.survival_trials;
    let mut eliminated = Vec::with_capacity(m);
    for k in 0..m as u64 {
        let mut rng = stream(cfg.root_seed(), Purpose::Verification, SURVIVAL_OFFSET + 1 + k);
        let rec = run_closed_loop(&graph, &map, &x0, &ctl, Policy::Empc, &mut rng)?;
        eliminated.push(rec.elimination_time);
    }
    let grid = crate::sampling_grid(ctl.dt, ctl.horizon);
    for &t in &grid {
        let alive = eliminated.iter().filter(|e| e.map_or(true, |te| te > t)).count() as f64 / m as f64;
        let b = survival_bound(ell0, ctl.r, ctl.dt, t)?;
        let se = (b * (1.0 - b) / m as f64).sqrt();
        suite.check(alive <= b + SURVIVAL_SIGMAS * se, || format!("t = {t}: survival frequency {alive} above bound {b}"));
        if alive == 0.0 {
            break;
        }
    }
    let times: Vec<f64> = eliminated.iter().flatten().copied().collect();
    suite.check(times.len() == m, || format!("{} of {m} runs not eliminated by the horizon", m - times.len()));
    if !times.is_empty() {
        let mean = times.iter().sum::<f64>() / times.len() as f64;
        let bound = elimination_time_bound(ell0, ctl.r, ctl.dt)?;
        suite.check(mean <= bound, || format!("mean elimination time {mean} above bound {bound}"));
        suite.notes.push(format!("mean elimination time {mean:.4} vs bound {bound:.4}"));
    }
    Ok(suite)
}

pub fn run_verify(cfg: &ScenarioConfig) -> CliResult<VerifyReport> {
    cfg.validate()?;
    cfg.validate_verify()?;
    let (contain, nest) = containment_and_nesting(cfg)?;
    let suites = vec![contain, nest, crude_overshoot(cfg)?, lp_equivalence(cfg), feasibility_soundness(cfg)?, survival(cfg)?];
    Ok(VerifyReport { root_seed: cfg.root_seed(), suites })
}

/// Runs every suite, writes `verify.json` and fails when any suite fails.
pub fn cmd_verify(cfg: &ScenarioConfig, out: &Path) -> CliResult<VerifyReport> {
    let report = run_verify(cfg)?;
    let out = OutputDir::create(out)?;
    out.write_json("verify.json", &report)?;
    out.write_metadata("verify", cfg)?;
    if !report.passed() {
        let failed: Vec<String> = report
            .suites
            .iter()
            .filter(|s| !s.passed())
            .map(|s| format!("{}: {}", s.name, s.failures.first().map(String::as_str).unwrap_or("no checks ran")))
            .collect();
        return Err(CliError::Failed(format!("verification failed\n{}", failed.join("\n"))));
    }
    Ok(report)
}
