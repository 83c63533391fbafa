//! The minimal subsystem interface a master algorithm relies on.

use thiserror::Error;

use crate::signals::Variable;

/// Outputs larger than this (in base units) are treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SubsystemError {
    #[error("step size must be positive, got {0}")]
    InvalidStep(f64),
    #[error("expected {expected} input values, got {actual}")]
    InputCount { expected: usize, actual: usize },
    #[error("{subsystem}: {quantity} became {value}")]
    Diverged {
        subsystem: String,
        quantity: String,
        value: f64,
    },
}

/// Declared direct feed-through from a local input to a local output.
///
/// `derivative` carries `∂y/∂u` when the subsystem is able to report it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feedthrough {
    pub output: usize,
    pub input: usize,
    pub derivative: Option<f64>,
}

/// A black-box subsystem: set inputs, advance time, report outputs.
///
/// Steps are never refused or shortened; advancing by `h` and then `h'` ends
/// at the same time as advancing by `h + h'`. Outputs reported after a step
/// belong to the end time of that step.
pub trait Subsystem: Send {
    fn name(&self) -> &str;

    fn inputs(&self) -> &[Variable];

    fn outputs(&self) -> &[Variable];

    fn set_inputs(&mut self, values: &[f64]) -> Result<(), SubsystemError>;

    fn do_step(&mut self, h: f64) -> Result<(), SubsystemError>;

    fn get_outputs(&self, out: &mut [f64]);

    /// Order `m` of the polynomial used to extrapolate inputs across a step.
    fn extrapolation_order(&self) -> usize {
        0
    }

    fn feedthrough(&self) -> Vec<Feedthrough> {
        Vec::new()
    }

    /// Energy stored in the subsystem, when it keeps track of one.
    fn energy(&self) -> Option<f64> {
        None
    }
}

/// Split `h` into forward-Euler micro steps of `micro_dt`, shortening the last
/// one so the steps sum to `h`.
pub fn micro_steps(h: f64, micro_dt: f64) -> impl Iterator<Item = f64> {
    let ratio = h / micro_dt;
    let nearest = ratio.round();
    // absorb representation noise like 0.05 / 1e-4 = 500.00000000000006
    let full = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        ratio.floor()
    };
    let full = full as usize;
    let remainder = h - full as f64 * micro_dt;
    let tail = (remainder > 1e-12 * h).then_some(remainder);
    let (count, last) = match tail {
        Some(r) => (full + 1, r),
        None if full == 0 => (1, h),
        None => (full, h - (full - 1) as f64 * micro_dt),
    };
    (0..count).map(move |k| if k + 1 == count { last } else { micro_dt })
}

pub(crate) fn check_step(h: f64) -> Result<(), SubsystemError> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(SubsystemError::InvalidStep(h))
    }
}

pub(crate) fn check_inputs(expected: usize, values: &[f64]) -> Result<(), SubsystemError> {
    if values.len() == expected {
        Ok(())
    } else {
        Err(SubsystemError::InputCount {
            expected,
            actual: values.len(),
        })
    }
}

pub(crate) fn check_state(
    subsystem: &str,
    states: &[(&str, f64)],
) -> Result<(), SubsystemError> {
    for &(quantity, value) in states {
        if !value.is_finite() || value.abs() > DIVERGENCE_LIMIT {
            return Err(SubsystemError::Diverged {
                subsystem: subsystem.to_owned(),
                quantity: quantity.to_owned(),
                value,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_multiple_has_no_remainder() {
        let steps: Vec<f64> = micro_steps(0.05, 1e-4).collect();
        assert_eq!(steps.len(), 500);
        let total: f64 = steps.iter().sum();
        assert!((total - 0.05).abs() <= 1e-12 * 0.05);
    }

    #[test]
    fn step_shorter_than_micro_dt() {
        let steps: Vec<f64> = micro_steps(3e-5, 1e-4).collect();
        assert_eq!(steps, vec![3e-5]);
    }

    #[test]
    fn remainder_is_a_short_last_step() {
        let steps: Vec<f64> = micro_steps(0.00025, 1e-4).collect();
        assert_eq!(steps.len(), 3);
        assert!((steps[2] - 0.5e-4).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn steps_sum_to_h(n in 0usize..2000, frac in 0.0f64..1.0, micro in 1e-5f64..1e-2) {
            let h = (n as f64 + frac) * micro;
            prop_assume!(h > 0.0);
            let steps: Vec<f64> = micro_steps(h, micro).collect();
            let total: f64 = steps.iter().sum();
            prop_assert!((total - h).abs() <= 1e-12 * h);
            prop_assert!(steps.iter().all(|&s| s > 0.0 && s <= micro * (1.0 + 1e-9)));
        }
    }
}
