//! Tolerance normalization and aggregation of local errors into a scalar
//! error indicator.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::LocalErrors;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndicatorError {
    #[error("cannot aggregate an empty error vector")]
    Empty,
    #[error("length mismatch: {errors} errors, {magnitudes} magnitudes, {tolerances} tolerances")]
    LengthMismatch {
        errors: usize,
        magnitudes: usize,
        tolerances: usize,
    },
    #[error("tolerance {index}: absolute {absolute} and relative {relative} must be non-negative and not both zero")]
    InvalidTolerance {
        index: usize,
        absolute: f64,
        relative: f64,
    },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

/// Per-signal absolute (`δ_k`) and relative (`σ_k`) tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSet {
    absolute: Vec<f64>,
    relative: Vec<f64>,
}

impl ToleranceSet {
    pub fn new(absolute: Vec<f64>, relative: Vec<f64>) -> Result<Self, IndicatorError> {
        if absolute.len() != relative.len() {
            return Err(IndicatorError::LengthMismatch {
                errors: absolute.len(),
                magnitudes: relative.len(),
                tolerances: absolute.len(),
            });
        }
        for (index, (&a, &r)) in absolute.iter().zip(&relative).enumerate() {
            let ok = a >= 0.0 && r >= 0.0 && a + r > 0.0 && (a + r).is_finite();
            if !ok {
                return Err(IndicatorError::InvalidTolerance {
                    index,
                    absolute: a,
                    relative: r,
                });
            }
        }
        Ok(Self { absolute, relative })
    }

    pub fn len(&self) -> usize {
        self.absolute.len()
    }

    pub fn is_empty(&self) -> bool {
        self.absolute.is_empty()
    }

    pub fn absolute(&self) -> &[f64] {
        &self.absolute
    }

    pub fn relative(&self) -> &[f64] {
        &self.relative
    }
}

/// Tolerances from one relative tolerance and per-signal typical magnitudes:
/// `δ_k = σ ū_k`, `σ_k = σ`.
pub fn scaled_tolerances(relative: f64, typical: &[f64]) -> Result<ToleranceSet, IndicatorError> {
    if relative.is_nan() || relative <= 0.0 {
        return Err(IndicatorError::NonPositive("relative tolerance"));
    }
    if typical.iter().any(|&u| u.is_nan() || u <= 0.0) {
        return Err(IndicatorError::NonPositive("typical magnitude"));
    }
    ToleranceSet::new(
        typical.iter().map(|u| relative * u).collect(),
        vec![relative; typical.len()],
    )
}

/// `ε_k = Δy_k / (δ_k + σ_k |y_k|)`, sign preserved.
pub fn normalize(
    errors: &[f64],
    values: &[f64],
    tol: &ToleranceSet,
) -> Result<Vec<f64>, IndicatorError> {
    if errors.len() != values.len() || errors.len() != tol.len() {
        return Err(IndicatorError::LengthMismatch {
            errors: errors.len(),
            magnitudes: values.len(),
            tolerances: tol.len(),
        });
    }
    Ok(errors
        .iter()
        .zip(values)
        .zip(tol.absolute.iter().zip(&tol.relative))
        .map(|((&e, &y), (&a, &r))| e / (a + r * y.abs()))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationKind {
    #[default]
    Rmse,
    Mae,
    Max,
}

/// Collapse normalized errors into a non-negative scalar.
pub fn aggregate(normalized: &[f64], kind: AggregationKind) -> Result<f64, IndicatorError> {
    if normalized.is_empty() {
        return Err(IndicatorError::Empty);
    }
    let n = normalized.len() as f64;
    Ok(match kind {
        AggregationKind::Rmse => (normalized.iter().map(|e| e * e).sum::<f64>() / n).sqrt(),
        AggregationKind::Mae => normalized.iter().map(|e| e.abs()).sum::<f64>() / n,
        AggregationKind::Max => normalized.iter().fold(0.0, |m, e| m.max(e.abs())),
    })
}

/// Tolerances plus aggregation: the full path from local errors to `ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorIndicator {
    pub tolerances: ToleranceSet,
    pub aggregation: AggregationKind,
}

impl ErrorIndicator {
    pub fn evaluate(&self, local: &LocalErrors) -> Result<f64, IndicatorError> {
        let normalized = normalize(&local.errors, &local.magnitudes, &self.tolerances)?;
        aggregate(&normalized, self.aggregation)
    }
}
