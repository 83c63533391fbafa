//! Rollback-free local coupling-error estimators.
//!
//! Each estimator turns the signals at a synchronization point (plus, for the
//! predictor, some history) into a vector of local errors together with the
//! magnitudes those errors are measured relative to. The indicator module
//! normalizes and aggregates them into a scalar.

pub mod ecco;
pub mod lagrange;
pub mod nepce;
pub mod predictor;

use nalgebra::DMatrix;
use thiserror::Error;

pub use ecco::{
    bond_transmitted_power, ecco_residual_energy, ecco_residual_power, ecco_total_residual,
    BondResidual,
};
pub use lagrange::{lagrange_predict, lagrange_weights};
pub use nepce::{nepce_feedthrough_correction, nepce_input_error, FeedthroughModel};
pub use predictor::predictor_output_error;

use crate::history::StepHistory;
use crate::signals::{ConnectionGraph, PowerBond};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("duplicate sample time {0}")]
    DuplicateTimes(f64),
    #[error("prediction target {target} is not after the latest sample {latest}")]
    TargetNotAhead { target: f64, latest: f64 },
    #[error("need {needed} samples, have {have}")]
    InsufficientHistory { needed: usize, have: usize },
    #[error("predictor order must be at least 1, got {0}")]
    InvalidOrder(usize),
    #[error("invalid interface Jacobian entry (output {output}, input {input})")]
    InvalidJacobian { output: usize, input: usize },
    #[error("feed-through is declared but its derivatives are not available")]
    FeedthroughUnavailable,
    #[error(
        "feed-through correction matrix is singular (condition {condition:.3e}); \
         use the uncorrected input error instead"
    )]
    SingularFeedthrough { condition: f64 },
    #[error("energy residuals need at least one power bond")]
    NoPowerBonds,
}

/// Sizes of the coupled system an estimator runs against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dimensions {
    pub n_inputs: usize,
    pub n_outputs: usize,
    pub n_bonds: usize,
}

/// Everything known at a synchronization point `t[i]`.
#[derive(Debug, Clone, Copy)]
pub struct SyncPoint<'a> {
    pub t: f64,
    /// Length of the step that ended at `t`.
    pub dt: f64,
    /// Inputs held during that step, `ũ[i] = u[i-1]` under zero-order hold.
    pub u_held: &'a [f64],
    /// Inputs routed from the new outputs, `u[i] = L y[i]`.
    pub u_next: &'a [f64],
    pub y: &'a [f64],
    /// Earlier synchronization points, not including this one.
    pub history: &'a StepHistory,
    pub bonds: &'a [PowerBond],
    pub residuals: &'a [BondResidual],
}

/// Local errors and the reference magnitudes they are normalized against.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalErrors {
    pub errors: Vec<f64>,
    pub magnitudes: Vec<f64>,
}

/// Produces local coupling errors at each synchronization point.
pub trait ErrorEstimator: Send {
    fn name(&self) -> &str;

    /// Number of error components produced for a system of the given size.
    fn error_count(&self, dims: Dimensions) -> usize;

    /// Polynomial order `p` of the error in the macro step size.
    fn order(&self) -> usize;

    /// Past synchronization points the estimator needs to see.
    fn history_depth(&self) -> usize {
        0
    }

    /// `Ok(None)` while warming up.
    fn estimate(&mut self, point: &SyncPoint<'_>) -> Result<Option<LocalErrors>, EstimatorError>;
}

/// Input errors `u[i] - ũ[i]`, optionally corrected for direct feed-through.
#[derive(Debug, Clone)]
pub struct NepceEstimator {
    extrapolation_order: usize,
    correction: Option<DMatrix<f64>>,
}

impl NepceEstimator {
    pub fn new(extrapolation_order: usize) -> Self {
        Self {
            extrapolation_order,
            correction: None,
        }
    }

    /// Apply `(I - L J_y)^-1` to the raw input errors.
    pub fn with_feedthrough(
        extrapolation_order: usize,
        graph: &ConnectionGraph,
        feedthrough: &FeedthroughModel,
    ) -> Result<Self, EstimatorError> {
        let correction = feedthrough.correction_matrix(graph)?;
        Ok(Self {
            extrapolation_order,
            correction: Some(correction),
        })
    }
}

impl ErrorEstimator for NepceEstimator {
    fn name(&self) -> &str {
        "nepce"
    }

    fn error_count(&self, dims: Dimensions) -> usize {
        dims.n_inputs
    }

    fn order(&self) -> usize {
        self.extrapolation_order + 1
    }

    fn estimate(&mut self, point: &SyncPoint<'_>) -> Result<Option<LocalErrors>, EstimatorError> {
        let raw = nepce_input_error(point.u_next, point.u_held)?;
        let errors = match &self.correction {
            Some(m) => nepce::solve(m, &raw)?,
            None => raw,
        };
        Ok(Some(LocalErrors {
            errors,
            magnitudes: point.u_next.iter().map(|u| u.abs()).collect(),
        }))
    }
}

/// Output errors against a Lagrange prediction of order `m + 1`.
#[derive(Debug, Clone)]
pub struct PredictorEstimator {
    extrapolation_order: usize,
    feedthrough: bool,
    samples: Vec<(f64, f64)>,
}

impl PredictorEstimator {
    /// `feedthrough` lowers the error order from `m + 2` to `m + 1`.
    pub fn new(extrapolation_order: usize, feedthrough: bool) -> Self {
        Self {
            extrapolation_order,
            feedthrough,
            samples: Vec::new(),
        }
    }

    pub fn predictor_order(&self) -> usize {
        self.extrapolation_order + 1
    }
}

impl ErrorEstimator for PredictorEstimator {
    fn name(&self) -> &str {
        "predictor"
    }

    fn error_count(&self, dims: Dimensions) -> usize {
        dims.n_outputs
    }

    fn order(&self) -> usize {
        self.extrapolation_order + if self.feedthrough { 1 } else { 2 }
    }

    fn history_depth(&self) -> usize {
        self.predictor_order() + 1
    }

    fn estimate(&mut self, point: &SyncPoint<'_>) -> Result<Option<LocalErrors>, EstimatorError> {
        let r = self.predictor_order();
        let Some(window) = point.history.last_n(r + 1) else {
            return Ok(None);
        };
        let window: Vec<_> = window.collect();
        let mut errors = Vec::with_capacity(point.y.len());
        for (k, &y_now) in point.y.iter().enumerate() {
            self.samples.clear();
            self.samples.extend(window.iter().map(|e| (e.t, e.y[k])));
            match predictor_output_error(&self.samples, y_now, point.t, r)? {
                Some(e) => errors.push(e),
                None => return Ok(None),
            }
        }
        Ok(Some(LocalErrors {
            errors,
            magnitudes: point.y.iter().map(|y| y.abs()).collect(),
        }))
    }
}

/// Residual energy per power bond, measured against the energy the bond
/// carried over the step.
#[derive(Debug, Clone)]
pub struct EccoEstimator {
    extrapolation_order: usize,
}

impl EccoEstimator {
    pub fn new(extrapolation_order: usize) -> Self {
        Self {
            extrapolation_order,
        }
    }
}

impl ErrorEstimator for EccoEstimator {
    fn name(&self) -> &str {
        "ecco"
    }

    fn error_count(&self, dims: Dimensions) -> usize {
        dims.n_bonds
    }

    fn order(&self) -> usize {
        self.extrapolation_order + 2
    }

    fn estimate(&mut self, point: &SyncPoint<'_>) -> Result<Option<LocalErrors>, EstimatorError> {
        if point.bonds.is_empty() {
            return Err(EstimatorError::NoPowerBonds);
        }
        let errors = point.residuals.iter().map(|r| r.energy).collect();
        let magnitudes = point
            .bonds
            .iter()
            .map(|b| bond_transmitted_power(b, point.y, point.u_held) * point.dt)
            .collect();
        Ok(Some(LocalErrors { errors, magnitudes }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::HistoryEntry;

    fn point<'a>(
        history: &'a StepHistory,
        u_held: &'a [f64],
        u_next: &'a [f64],
        y: &'a [f64],
        t: f64,
    ) -> SyncPoint<'a> {
        SyncPoint {
            t,
            dt: 0.1,
            u_held,
            u_next,
            y,
            history,
            bonds: &[],
            residuals: &[],
        }
    }

    #[test]
    fn nepce_uses_held_and_next_inputs() {
        let h = StepHistory::with_capacity(2);
        let mut est = NepceEstimator::new(0);
        let got = est
            .estimate(&point(&h, &[1.0, -1.0], &[3.0, -1.0], &[0.0, 0.0], 0.1))
            .unwrap()
            .unwrap();
        assert_eq!(got.errors, vec![2.0, 0.0]);
        assert_eq!(got.magnitudes, vec![3.0, 1.0]);
        assert_eq!(est.order(), 1);
    }

    #[test]
    fn predictor_warms_up_then_matches_second_difference() {
        let mut h = StepHistory::for_order(1);
        let mut est = PredictorEstimator::new(0, false);
        assert_eq!(est.order(), 2);
        let ys = [0.0, 1.0, 4.0];
        for (i, &y) in ys.iter().enumerate() {
            let t = i as f64 * 0.1;
            let y = [y];
            let got = est.estimate(&point(&h, &[], &[], &y, t)).unwrap();
            if i < 2 {
                assert!(got.is_none());
            } else {
                let e = got.unwrap().errors[0];
                assert!((e - 2.0).abs() < 1e-12);
            }
            h.push(HistoryEntry {
                t,
                dt: 0.1,
                u: vec![],
                y: y.to_vec(),
                eps: 0.0,
            })
            .unwrap();
        }
    }

    #[test]
    fn ecco_requires_bonds() {
        let h = StepHistory::with_capacity(1);
        let mut est = EccoEstimator::new(0);
        assert_eq!(
            est.estimate(&point(&h, &[], &[], &[], 0.1)),
            Err(EstimatorError::NoPowerBonds)
        );
    }
}
