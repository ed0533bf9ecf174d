//! Fréchet bounds on a joint probability from its two marginals.
//!
//! The checked entry points validate their inputs; the `*_raw` forms are used
//! inside the bound dynamics, where crude upper bounds may leave `[0, 1]`.

use crate::error::{Error, Result};

/// Slack allowed when validating probability arguments.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

fn check(x: f64) -> Result<f64> {
    if x.is_finite() && (-PROBABILITY_TOLERANCE..=1.0 + PROBABILITY_TOLERANCE).contains(&x) {
        Ok(x.clamp(0.0, 1.0))
    } else {
        Err(Error::InvalidProbability { value: x })
    }
}

/// `max{0, y + z - 1}`: the smallest joint probability consistent with marginals `y`, `z`.
pub fn frechet_lower(y: f64, z: f64) -> Result<f64> {
    Ok(frechet_lower_raw(check(y)?, check(z)?))
}

/// `min{y, z}`: the largest joint probability consistent with marginals `y`, `z`.
pub fn frechet_upper(y: f64, z: f64) -> Result<f64> {
    Ok(frechet_upper_raw(check(y)?, check(z)?))
}

#[inline(always)]
pub fn frechet_lower_raw(y: f64, z: f64) -> f64 {
    (y + z - 1.0).max(0.0)
}

#[inline(always)]
pub fn frechet_upper_raw(y: f64, z: f64) -> f64 {
    y.min(z)
}
