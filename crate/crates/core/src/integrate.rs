//! Classical fourth-order Runge–Kutta with a fixed step.
//!
//! Shared by the bound dynamics and the master-equation propagator. The
//! right-hand sides are Lipschitz but have min/max kinks, so no adaptive
//! error control is attempted.

use crate::error::{Error, Result};

/// Number of equal steps covering `duration` with a step close to `step`.
///
/// `duration / step` is rounded to the nearest integer (at least one step for
/// a positive duration); the step actually taken is `duration / count`.
pub fn step_count(duration: f64, step: f64) -> Result<usize> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidParameter(format!("integration step {step} must be positive")));
    }
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(Error::InvalidParameter(format!("duration {duration} must be non-negative")));
    }
    if duration == 0.0 {
        return Ok(0);
    }
    Ok(((duration / step).round() as usize).max(1))
}

/// Scratch buffers for repeated RK4 steps on a state of fixed length.
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// Advances `x` by one step of size `h` under the autonomous field `rhs(x, dx)`.
    pub fn step<F>(&mut self, x: &mut [f64], h: f64, rhs: &mut F)
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let Self { k1, k2, k3, k4, tmp } = self;
        rhs(x, k1);
        for ((t, &xi), &k) in tmp.iter_mut().zip(x.iter()).zip(k1.iter()) {
            *t = xi + 0.5 * h * k;
        }
        rhs(tmp, k2);
        for ((t, &xi), &k) in tmp.iter_mut().zip(x.iter()).zip(k2.iter()) {
            *t = xi + 0.5 * h * k;
        }
        rhs(tmp, k3);
        for ((t, &xi), &k) in tmp.iter_mut().zip(x.iter()).zip(k3.iter()) {
            *t = xi + h * k;
        }
        rhs(tmp, k4);
        let sixth = h / 6.0;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}
