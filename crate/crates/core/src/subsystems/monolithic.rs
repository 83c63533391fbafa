//! Single-solver forward-Euler references for the builtin coupled systems.
//!
//! Outputs are reported in the same order as the co-simulated system's global
//! output vector, so the two can be differenced directly.

use thiserror::Error;

use super::quarter_car::{QuarterCarParams, QuarterCarState};
use crate::subsystem::{micro_steps, DIVERGENCE_LIMIT};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonolithicError {
    #[error("solver step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("stop time {t_stop} precedes start time {t_start}")]
    InvalidSpan { t_start: f64, t_stop: f64 },
    #[error("monolithic reference diverged at t = {t}")]
    Diverged { t: f64 },
    #[error("no reference sample within {tolerance} of t = {t}")]
    OutOfRange { t: f64, tolerance: f64 },
}

/// A coupled system solved as one state-space model.
pub trait MonolithicModel {
    fn outputs(&self) -> Vec<f64>;

    fn energy(&self) -> f64;

    /// One explicit Euler step; every rate comes from the current state.
    fn euler_step(&mut self, dt: f64);

    fn is_finite(&self) -> bool;
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonolithicOscillator {
    pub mass: f64,
    pub stiffness: f64,
    pub damping: f64,
    pub position: f64,
    pub velocity: f64,
}

impl MonolithicModel for MonolithicOscillator {
    fn outputs(&self) -> Vec<f64> {
        vec![self.velocity, self.force()]
    }

    fn energy(&self) -> f64 {
        0.5 * self.mass * self.velocity * self.velocity
            + 0.5 * self.stiffness * self.position * self.position
    }

    fn euler_step(&mut self, dt: f64) {
        let accel = self.force() / self.mass;
        self.position += self.velocity * dt;
        self.velocity += accel * dt;
    }

    fn is_finite(&self) -> bool {
        bounded(&[self.position, self.velocity])
    }
}

impl MonolithicOscillator {
    fn force(&self) -> f64 {
        -self.stiffness * self.position - self.damping * self.velocity
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonolithicQuarterCar {
    pub params: QuarterCarParams,
    pub state: QuarterCarState,
}

impl MonolithicQuarterCar {
    fn suspension_force(&self) -> f64 {
        let p = &self.params;
        let s = &self.state;
        p.suspension_stiffness * (s.wheel_position - s.chassis_position)
            + p.suspension_damping * (s.wheel_velocity - s.chassis_velocity)
    }
}

impl MonolithicModel for MonolithicQuarterCar {
    fn outputs(&self) -> Vec<f64> {
        vec![self.state.chassis_velocity, self.suspension_force()]
    }

    fn energy(&self) -> f64 {
        let p = &self.params;
        let s = &self.state;
        let stretch = s.wheel_position - s.chassis_position;
        0.5 * p.chassis_mass * s.chassis_velocity * s.chassis_velocity
            + 0.5 * p.wheel_mass * s.wheel_velocity * s.wheel_velocity
            + 0.5 * p.suspension_stiffness * stretch * stretch
            + 0.5 * p.tyre_stiffness * s.wheel_position * s.wheel_position
    }

    fn euler_step(&mut self, dt: f64) {
        let p = self.params;
        let force = self.suspension_force();
        let s = &mut self.state;
        let chassis_accel = force / p.chassis_mass;
        let wheel_accel = (-force - p.tyre_stiffness * s.wheel_position) / p.wheel_mass;
        s.chassis_position += s.chassis_velocity * dt;
        s.wheel_position += s.wheel_velocity * dt;
        s.chassis_velocity += chassis_accel * dt;
        s.wheel_velocity += wheel_accel * dt;
    }

    fn is_finite(&self) -> bool {
        let s = &self.state;
        bounded(&[
            s.chassis_position,
            s.chassis_velocity,
            s.wheel_position,
            s.wheel_velocity,
        ])
    }
}

fn bounded(values: &[f64]) -> bool {
    values
        .iter()
        .all(|v| v.is_finite() && v.abs() <= DIVERGENCE_LIMIT)
}

/// Time series of a monolithic run.
#[derive(Debug, Clone, PartialEq)]
pub struct MonolithicSeries {
    pub micro_dt: f64,
    pub times: Vec<f64>,
    pub outputs: Vec<Vec<f64>>,
    pub energy: Vec<f64>,
}

impl MonolithicSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Outputs and energy at `t`, linearly interpolated between samples.
    ///
    /// Fails when `t` is further than one solver step outside the series.
    pub fn sample_at(&self, t: f64) -> Result<(Vec<f64>, f64), MonolithicError> {
        let out_of_range = MonolithicError::OutOfRange {
            t,
            tolerance: self.micro_dt,
        };
        let (first, last) = match (self.times.first(), self.times.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(out_of_range),
        };
        if t < first - self.micro_dt || t > last + self.micro_dt {
            return Err(out_of_range);
        }
        let idx = self.times.partition_point(|&s| s < t);
        if idx < self.times.len() && self.times[idx] == t {
            return Ok((self.outputs[idx].clone(), self.energy[idx]));
        }
        if idx == 0 {
            return Ok((self.outputs[0].clone(), self.energy[0]));
        }
        if idx == self.times.len() {
            return Ok((self.outputs[idx - 1].clone(), self.energy[idx - 1]));
        }
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        let w = (t - t0) / (t1 - t0);
        let lerp = |a: f64, b: f64| a + w * (b - a);
        let outputs = self.outputs[idx - 1]
            .iter()
            .zip(&self.outputs[idx])
            .map(|(&a, &b)| lerp(a, b))
            .collect();
        Ok((outputs, lerp(self.energy[idx - 1], self.energy[idx])))
    }
}

/// Integrate `model` from `t_start` to `t_stop` with forward Euler.
///
/// The solver steps `micro_dt` but lands exactly on every time in
/// `breakpoints` (shortening the step before it), so samples exist at the
/// synchronization times of a co-simulation being compared against.
pub fn run_monolithic<M: MonolithicModel>(
    model: &mut M,
    t_start: f64,
    t_stop: f64,
    micro_dt: f64,
    breakpoints: &[f64],
) -> Result<MonolithicSeries, MonolithicError> {
    if micro_dt.is_nan() || micro_dt <= 0.0 {
        return Err(MonolithicError::InvalidStep(micro_dt));
    }
    if t_stop.is_nan() || t_start.is_nan() || t_stop < t_start {
        return Err(MonolithicError::InvalidSpan { t_start, t_stop });
    }
    let mut stops: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| b > t_start && b < t_stop)
        .collect();
    stops.push(t_stop);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let capacity = ((t_stop - t_start) / micro_dt).ceil() as usize + stops.len() + 1;
    let mut series = MonolithicSeries {
        micro_dt,
        times: Vec::with_capacity(capacity),
        outputs: Vec::with_capacity(capacity),
        energy: Vec::with_capacity(capacity),
    };
    let mut record = |t: f64, m: &M| {
        series.times.push(t);
        series.outputs.push(m.outputs());
        series.energy.push(m.energy());
    };
    record(t_start, model);

    let mut t = t_start;
    for &stop in stops.iter().filter(|&&s| s > t_start) {
        let base = t;
        let mut elapsed = 0.0;
        let mut steps = micro_steps(stop - base, micro_dt).peekable();
        while let Some(dt) = steps.next() {
            model.euler_step(dt);
            elapsed += dt;
            t = if steps.peek().is_none() { stop } else { base + elapsed };
            if !model.is_finite() {
                return Err(MonolithicError::Diverged { t });
            }
            record(t, model);
        }
    }
    Ok(series)
}
