//! Scenario configuration, loaded from TOML or JSON.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use seiv_core::empc::{ControllerConfig, QuarantineMap};
use seiv_core::graph::erdos_renyi;
use seiv_core::io::read_network;
use seiv_core::model::{Compartment, SpreadingGraph, SpreadingParams, SystemState, UniformRates};
use seiv_core::rng::{derived_seed, stream, Purpose};
use seiv_core::stochastic::MAX_ORACLE_NODES;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSource {
    /// Seed defaults to one derived from the root seed.
    ErdosRenyi { n: usize, p: f64, seed: Option<u64> },
    /// Network JSON document; only its graph is used unless `params` points at it too.
    File { path: PathBuf },
}

impl Default for GraphSource {
    fn default() -> Self {
        GraphSource::ErdosRenyi { n: 50, p: 0.6, seed: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParamsSource {
    Uniform {
        #[serde(default = "defaults::alpha")]
        alpha: f64,
        #[serde(default = "defaults::beta")]
        beta: f64,
        #[serde(default = "defaults::gamma")]
        gamma: f64,
        #[serde(default = "defaults::delta")]
        delta: f64,
        #[serde(default = "defaults::eta")]
        eta: f64,
        #[serde(default = "defaults::xi")]
        xi: f64,
    },
    File { path: PathBuf },
}

mod defaults {
    use seiv_core::model::UniformRates;
    const R: UniformRates = UniformRates::REFERENCE;
    pub fn alpha() -> f64 {
        R.alpha
    }
    pub fn beta() -> f64 {
        R.beta
    }
    pub fn gamma() -> f64 {
        R.gamma
    }
    pub fn delta() -> f64 {
        R.delta
    }
    pub fn eta() -> f64 {
        R.eta
    }
    pub fn xi() -> f64 {
        R.xi
    }
}

impl Default for ParamsSource {
    fn default() -> Self {
        let r = UniformRates::REFERENCE;
        ParamsSource::Uniform { alpha: r.alpha, beta: r.beta, gamma: r.gamma, delta: r.delta, eta: r.eta, xi: r.xi }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// One letter per node, e.g. `"SEIV"`.
    Labels { labels: String },
    /// Random placement of the given numbers of E and I nodes; the rest are S.
    /// Counts default to a quarter of the nodes each, rounded to nearest.
    Random { exposed: Option<usize>, infected: Option<usize>, seed: Option<u64> },
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::Random { exposed: None, infected: None, seed: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    /// Length of each uncontrolled run.
    pub horizon: f64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self { horizon: 20.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSection {
    pub horizon: f64,
}

impl Default for BoundsSection {
    fn default() -> Self {
        Self { horizon: 5.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSection {
    /// Also run the total-quarantine baseline for every replication.
    pub baseline: bool,
    pub confidence_level: f64,
    pub bootstrap_resamples: usize,
    /// Number of leading replications whose full records are written.
    pub record_trials: usize,
}

impl Default for ControlSection {
    fn default() -> Self {
        Self { baseline: true, confidence_level: 0.98, bootstrap_resamples: 1000, record_trials: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Random oracle instances for the containment and nesting suites.
    pub instances: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub edge_probability: f64,
    pub rate_min: f64,
    pub rate_max: f64,
    pub horizon: f64,
    /// Integrator step is `controller.dt / step_divisor`.
    pub step_divisor: u32,
    pub slack: f64,
    pub lp_samples: usize,
    /// Random (state, action) pairs for the feasibility soundness suite.
    pub soundness_cases: usize,
    /// Closed-loop runs on a small instance for the survival and elimination suite.
    pub survival_trials: usize,
    pub survival_n: usize,
    /// Seeds searched for a crude upper bound above one.
    pub sweep_seeds: usize,
    /// Replace the refined field by a corrupted one in the containment suite.
    pub inject_fault: bool,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            instances: 20,
            n_min: 2,
            n_max: 5,
            edge_probability: 0.5,
            rate_min: 0.05,
            rate_max: 3.5,
            horizon: 5.0,
            step_divisor: 64,
            slack: 1e-6,
            lp_samples: 1000,
            soundness_cases: 40,
            survival_trials: 400,
            survival_n: 4,
            sweep_seeds: 500,
            inject_fault: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub graph: GraphSource,
    #[serde(default)]
    pub params: ParamsSource,
    #[serde(default)]
    pub initial: InitialCondition,
    /// `controller.seed` is the root seed of every random stream.
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Worker threads for replications; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub control: ControlSection,
    #[serde(default)]
    pub verify: VerifySection,
}

fn default_trials() -> usize {
    1000
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            graph: GraphSource::default(),
            params: ParamsSource::default(),
            initial: InitialCondition::default(),
            controller: ControllerConfig::default(),
            trials: default_trials(),
            workers: 0,
            simulate: SimulateSection::default(),
            bounds: BoundsSection::default(),
            control: ControlSection::default(),
            verify: VerifySection::default(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn check_rate(name: &str, v: f64) -> CliResult<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {v} must be finite and non-negative")))
    }
}

impl ScenarioConfig {
    /// Reads a `.toml` or `.json` file. Relative paths inside it are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        let mut cfg: ScenarioConfig = match ext.as_deref() {
            Some("toml") => toml::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?,
            Some("json") => serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?,
            _ => return Err(invalid(format!("{}: expected a .toml or .json file", path.display()))),
        };
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let GraphSource::File { path } = &mut self.graph {
            fix(path);
        }
        if let ParamsSource::File { path } = &mut self.params {
            fix(path);
        }
    }

    pub fn root_seed(&self) -> u64 {
        self.controller.seed
    }

    pub fn validate(&self) -> CliResult<()> {
        self.controller.validate().map_err(|e| invalid(e.to_string()))?;
        match &self.graph {
            GraphSource::ErdosRenyi { n, p, .. } => {
                if *n == 0 {
                    return Err(invalid("graph.n must be at least 1"));
                }
                if !(0.0..=1.0).contains(p) {
                    return Err(invalid(format!("graph.p = {p} must lie in [0, 1]")));
                }
            }
            GraphSource::File { path } => {
                if !path.is_file() {
                    return Err(invalid(format!("graph file {} does not exist", path.display())));
                }
            }
        }
        match &self.params {
            ParamsSource::Uniform { alpha, beta, gamma, delta, eta, xi } => {
                for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma), ("delta", delta), ("eta", eta), ("xi", xi)]
                {
                    check_rate(name, *v)?;
                }
            }
            ParamsSource::File { path } => {
                if !path.is_file() {
                    return Err(invalid(format!("parameter file {} does not exist", path.display())));
                }
            }
        }
        let c = &self.control;
        if !(c.confidence_level > 0.0 && c.confidence_level < 1.0) {
            return Err(invalid(format!("control.confidence_level = {} must lie in (0, 1)", c.confidence_level)));
        }
        if c.bootstrap_resamples == 0 {
            return Err(invalid("control.bootstrap_resamples must be at least 1"));
        }
        if !(self.simulate.horizon > 0.0 && self.simulate.horizon.is_finite()) {
            return Err(invalid("simulate.horizon must be finite and positive"));
        }
        if !(self.bounds.horizon >= 0.0 && self.bounds.horizon.is_finite()) {
            return Err(invalid("bounds.horizon must be finite and non-negative"));
        }
        Ok(())
    }

    /// Extra checks for commands that run replications.
    pub fn validate_trials(&self) -> CliResult<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        Ok(())
    }

    pub fn validate_verify(&self) -> CliResult<()> {
        let v = &self.verify;
        if v.n_min == 0 || v.n_min > v.n_max {
            return Err(invalid(format!("verify.n_min = {} and n_max = {} must satisfy 1 <= n_min <= n_max", v.n_min, v.n_max)));
        }
        for (what, n) in [("verify.n_max", v.n_max), ("verify.survival_n", v.survival_n)] {
            if n > MAX_ORACLE_NODES {
                return Err(invalid(format!("{what}: {}", seiv_core::Error::Capacity { n, max: MAX_ORACLE_NODES })));
            }
        }
        if v.survival_n == 0 {
            return Err(invalid("verify.survival_n must be at least 1"));
        }
        if !(v.rate_min >= 0.0 && v.rate_min <= v.rate_max && v.rate_max.is_finite()) {
            return Err(invalid("verify rates must satisfy 0 <= rate_min <= rate_max"));
        }
        if !(0.0..=1.0).contains(&v.edge_probability) {
            return Err(invalid("verify.edge_probability must lie in [0, 1]"));
        }
        if v.step_divisor == 0 || !(v.horizon > 0.0) || !(v.slack >= 0.0) {
            return Err(invalid("verify.step_divisor, horizon and slack must be positive"));
        }
        Ok(())
    }

    pub fn build(&self) -> CliResult<Scenario> {
        self.validate()?;
        let root = self.root_seed();
        let graph = match &self.graph {
            GraphSource::ErdosRenyi { n, p, seed } => {
                erdos_renyi(*n, *p, seed.unwrap_or_else(|| derived_seed(root, Purpose::Graph, 0)))?
            }
            GraphSource::File { path } => read_network(path)?.0,
        };
        let params = match &self.params {
            ParamsSource::Uniform { alpha, beta, gamma, delta, eta, xi } => SpreadingParams::uniform(
                &graph,
                UniformRates { alpha: *alpha, beta: *beta, gamma: *gamma, delta: *delta, eta: *eta, xi: *xi },
            ),
            ParamsSource::File { path } => {
                let (g, p) = read_network(path)?;
                if g != graph {
                    return Err(invalid(format!("parameter file {} describes a different graph", path.display())));
                }
                p
            }
        };
        let x0 = self.initial_state(graph.node_count())?;
        let map = QuarantineMap::new(&graph, params.clone())?;
        Ok(Scenario { graph, params, map, x0 })
    }

    fn initial_state(&self, n: usize) -> CliResult<SystemState> {
        match &self.initial {
            InitialCondition::Labels { labels } => {
                let x: SystemState = labels.parse().map_err(|e: seiv_core::Error| invalid(e.to_string()))?;
                if x.len() != n {
                    return Err(invalid(format!("initial.labels has {} nodes, graph has {n}", x.len())));
                }
                Ok(x)
            }
            InitialCondition::Random { exposed, infected, seed } => {
                let quarter = (n as f64 * 0.25).round() as usize;
                let (e, i) = (exposed.unwrap_or(quarter), infected.unwrap_or(quarter));
                if e + i > n {
                    return Err(invalid(format!("{e} exposed plus {i} infected exceeds {n} nodes")));
                }
                let mut rng = match seed {
                    Some(s) => stream(*s, Purpose::InitialState, 0),
                    None => stream(self.root_seed(), Purpose::InitialState, 0),
                };
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut rng);
                let mut x = SystemState::uniform(n, Compartment::S);
                for (k, &node) in order.iter().take(e + i).enumerate() {
                    x.set(node, if k < i { Compartment::I } else { Compartment::E });
                }
                Ok(x)
            }
        }
    }
}

/// Everything a command needs, built from a validated config.
pub struct Scenario {
    pub graph: SpreadingGraph,
    pub params: SpreadingParams,
    pub map: QuarantineMap,
    pub x0: SystemState,
}
