//! PI macro-step-size controller.
//!
//! The controller works on `log Δt`. With control error `e = -log ε` it
//! integrates `k_I e` into a logarithmic state `I`, adds the proportional
//! term `k_P e`, and clamps the resulting step to absolute bounds and to a
//! rate of change relative to the previous step. After clamping, `I` is reset
//! so that `I = log Δt - k_P e` (anti-windup).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Indicators below this are raised to it before taking the logarithm.
pub const EPS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControllerError {
    #[error("invalid controller configuration: {0}")]
    InvalidConfig(String),
    #[error("error indicator is not finite: {0}")]
    NonFiniteIndicator(f64),
    #[error("previous step size must be positive, got {0}")]
    InvalidPreviousStep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub k_p: f64,
    pub k_i: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    /// Safety factor `α` applied to the candidate step.
    #[serde(default = "one")]
    pub safety: f64,
    /// First macro step; defaults to `dt_min`.
    #[serde(default)]
    pub dt_start: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self::for_order(1)
    }
}

impl ControllerConfig {
    /// Gains `k_P = 0.4/p`, `k_I = 0.3/p` with the quarter-car bounds.
    pub fn for_order(p: usize) -> Self {
        let p = p.max(1) as f64;
        Self {
            k_p: 0.4 / p,
            k_i: 0.3 / p,
            dt_min: 1e-4,
            dt_max: 1e-2,
            theta_min: 0.2,
            theta_max: 1.5,
            safety: 1.0,
            dt_start: None,
        }
    }

    /// Pure integrating controller, `k_P = 0`, `k_I = 1/p`.
    pub fn integral_only(p: usize) -> Self {
        Self {
            k_p: 0.0,
            k_i: 1.0 / p.max(1) as f64,
            ..Self::for_order(p)
        }
    }

    /// Limits so wide they never bind in practice.
    pub fn unclamped(mut self) -> Self {
        self.dt_min = f64::MIN_POSITIVE;
        self.dt_max = f64::MAX;
        self.theta_min = f64::MIN_POSITIVE;
        self.theta_max = f64::MAX;
        self
    }

    pub fn start_step(&self) -> f64 {
        self.dt_start.unwrap_or(self.dt_min)
    }

    pub fn validate(&self) -> Result<(), ControllerError> {
        let bad = |msg: &str| Err(ControllerError::InvalidConfig(msg.to_owned()));
        let start = self.start_step();
        if !(self.k_p >= 0.0 && self.k_p.is_finite()) {
            return bad("k_p must be finite and non-negative");
        }
        if !(self.k_i > 0.0 && self.k_i.is_finite()) {
            return bad("k_i must be finite and positive");
        }
        if !(self.dt_min > 0.0 && self.dt_min <= start && start <= self.dt_max) {
            return bad("need 0 < dt_min <= dt_start <= dt_max");
        }
        if !start.is_finite() {
            return bad("dt_start must be finite");
        }
        if !(self.theta_min > 0.0 && self.theta_min < 1.0 && self.theta_max > 1.0) {
            return bad("need 0 < theta_min < 1 < theta_max");
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return bad("safety factor must lie in (0, 1]");
        }
        Ok(())
    }
}

/// Persistent controller state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    /// Logarithmic integral state `I` (log-seconds).
    pub integral: f64,
    pub last_dt: f64,
    pub last_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiController {
    config: ControllerConfig,
    last_dt: f64,
    last_error: f64,
    /// `I - log(last_dt)`. Kept relative to the last step so that `ε = 1`
    /// reproduces that step exactly instead of through `exp(log Δt)`.
    offset: f64,
}

impl PiController {
    pub fn new(config: ControllerConfig) -> Result<Self, ControllerError> {
        config.validate()?;
        let mut c = Self {
            config,
            last_dt: 0.0,
            last_error: 0.0,
            offset: 0.0,
        };
        c.reset();
        Ok(c)
    }

    /// `I = log(Δt_start)`, so a first call with `ε = 1` keeps `Δt_start`.
    pub fn reset(&mut self) {
        self.last_dt = self.config.start_step();
        self.last_error = 0.0;
        self.offset = 0.0;
    }

    pub fn state(&self) -> ControllerState {
        ControllerState {
            integral: self.last_dt.ln() + self.offset,
            last_dt: self.last_dt,
            last_error: self.last_error,
        }
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    /// Next macro step from the previous applied step and the latest `ε`.
    pub fn next_step_size(&mut self, dt_old: f64, eps: f64) -> Result<f64, ControllerError> {
        if !eps.is_finite() {
            return Err(ControllerError::NonFiniteIndicator(eps));
        }
        if !(dt_old > 0.0 && dt_old.is_finite()) {
            return Err(ControllerError::InvalidPreviousStep(dt_old));
        }
        let c = &self.config;
        let error = -eps.max(EPS_FLOOR).ln();
        // I' = I + k_I e and ℓ = k_P e + I', both measured from log(last_dt)
        let integral = self.offset + c.k_i * error;
        let log_candidate = c.k_p * error + integral;
        let candidate = c.safety * self.last_dt * log_candidate.exp();

        let dt = clamp_step(candidate, dt_old, c);
        // anti-windup: I = I' + log Δt - ℓ, which is log Δt - k_P e
        self.offset = integral - log_candidate;
        self.last_dt = dt;
        self.last_error = error;
        Ok(dt)
    }
}

/// Rate limits first, then hard bounds, which win when the two disagree.
fn clamp_step(candidate: f64, dt_old: f64, c: &ControllerConfig) -> f64 {
    let low = c.theta_min * dt_old;
    let high = c.theta_max * dt_old;
    let rate_limited = candidate.max(low).min(high);
    if high < c.dt_min {
        log::warn!(
            "rate limit {high:.3e} s is below dt_min {:.3e} s; using dt_min",
            c.dt_min
        );
    }
    rate_limited.max(c.dt_min).min(c.dt_max)
}

/// Unclamped candidate from the closed form
/// `Δt' = ε[i]^(-k_P-k_I) ε[i-1]^(k_P) Δt[i-1]`, scaled by the safety factor.
pub fn compact_reference(
    dt_prev: f64,
    eps_now: f64,
    eps_prev: f64,
    config: &ControllerConfig,
) -> f64 {
    config.safety
        * eps_now.powf(-config.k_p - config.k_i)
        * eps_prev.powf(config.k_p)
        * dt_prev
}
