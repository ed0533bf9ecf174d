use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    /// Bound dynamics are integrated with step `dt / step_divisor`.
    #[serde(default = "IntegratorConfig::default_divisor")]
    pub step_divisor: u32,
}

impl IntegratorConfig {
    fn default_divisor() -> u32 {
        64
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { step_divisor: Self::default_divisor() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    /// Required decay rate of the expected number of exposed and infected nodes.
    pub r: f64,
    /// Sampling interval.
    pub dt: f64,
    /// Length of the controlled run.
    pub horizon: f64,
    /// Number of random restarts of the local descent.
    #[serde(alias = "optimizer_budget")]
    pub k_max: usize,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub seed: u64,
    /// End a closed-loop run as soon as the disease-free set is reached.
    #[serde(default = "default_true")]
    pub stop_at_elimination: bool,
    /// Keep the full predicted bound state of every decision.
    #[serde(default)]
    pub record_bound_traces: bool,
}

fn default_true() -> bool {
    true
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            r: 0.07,
            dt: 0.375,
            horizon: 150.0,
            k_max: 4,
            integrator: IntegratorConfig::default(),
            seed: 0,
            stop_at_elimination: true,
            record_bound_traces: false,
        }
    }
}

impl ControllerConfig {
    pub fn step(&self) -> f64 {
        self.dt / self.integrator.step_divisor as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::InvalidParameter(format!("decay rate r = {} must be positive", self.r)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("sampling interval dt = {} must be positive", self.dt)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon {} must be non-negative", self.horizon)));
        }
        if self.integrator.step_divisor == 0 {
            return Err(Error::InvalidParameter("integrator.step_divisor must be at least 1".into()));
        }
        Ok(())
    }

    /// Sampling times `0, dt, 2 dt, ...` strictly before the horizon.
    pub fn sampling_times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..).map(move |k| k as f64 * self.dt).take_while(move |&t| t < self.horizon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_keys() {
        let cfg: ControllerConfig = serde_json::from_str(
            r#"{"r": 0.07, "dt": 0.375, "horizon": 10, "k_max": 3, "integrator": {"step_divisor": 16}, "seed": 9}"#,
        )
        .unwrap();
        assert_eq!(cfg.integrator.step_divisor, 16);
        assert_eq!(cfg.step(), 0.375 / 16.0);
        assert!(cfg.stop_at_elimination);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = ControllerConfig { r: 0.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg.r = 0.1;
        cfg.dt = -1.0;
        assert!(cfg.validate().is_err());
        cfg.dt = 0.5;
        cfg.integrator.step_divisor = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn sampling_times_stop_before_horizon() {
        let cfg = ControllerConfig { dt: 0.5, horizon: 2.0, ..Default::default() };
        assert_eq!(cfg.sampling_times().collect::<Vec<_>>(), vec![0.0, 0.5, 1.0, 1.5]);
    }
}
