//! Lagrange extrapolation over past synchronization points.

use super::EstimatorError;

/// Lagrange basis weights `L_j(t_target)` over the nodes `times`.
pub fn lagrange_weights(times: &[f64], t_target: f64) -> Result<Vec<f64>, EstimatorError> {
    for (j, &tj) in times.iter().enumerate() {
        if times[..j].contains(&tj) {
            return Err(EstimatorError::DuplicateTimes(tj));
        }
    }
    Ok(times
        .iter()
        .enumerate()
        .map(|(j, &tj)| {
            times
                .iter()
                .enumerate()
                .filter(|&(l, _)| l != j)
                .map(|(_, &tl)| (t_target - tl) / (tj - tl))
                .product()
        })
        .collect())
}

/// Extrapolate the polynomial through `samples` (time, value) to `t_target`.
///
/// The polynomial has degree `samples.len() - 1`. Sample times must increase
/// strictly and `t_target` must lie beyond the last of them.
pub fn lagrange_predict(samples: &[(f64, f64)], t_target: f64) -> Result<f64, EstimatorError> {
    let Some(&(t_last, _)) = samples.last() else {
        return Err(EstimatorError::InsufficientHistory { needed: 1, have: 0 });
    };
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        let dup = samples
            .windows(2)
            .find(|w| w[1].0 <= w[0].0)
            .map(|w| w[1].0)
            .unwrap_or(t_last);
        return Err(EstimatorError::DuplicateTimes(dup));
    }
    if t_target <= t_last {
        return Err(EstimatorError::TargetNotAhead {
            target: t_target,
            latest: t_last,
        });
    }
    let times: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let weights = lagrange_weights(&times, t_target)?;
    Ok(weights.iter().zip(samples).map(|(w, s)| w * s.1).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_is_reproduced() {
        let s = [(0.0, 7.5), (0.3, 7.5), (1.1, 7.5), (1.2, 7.5)];
        assert!((lagrange_predict(&s, 2.0).unwrap() - 7.5).abs() < 1e-12);
    }

    #[test]
    fn quadratic_uniform() {
        // samples of t^2, predicted at 3 -> 9
        let s = [(0.0, 0.0), (1.0, 1.0), (2.0, 4.0)];
        assert!((lagrange_predict(&s, 3.0).unwrap() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_nonuniform() {
        let s = [(0.0, 0.0), (0.5, 0.25), (2.0, 4.0)];
        assert!((lagrange_predict(&s, 3.0).unwrap() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_times_rejected() {
        let s = [(0.0, 0.0), (0.0, 1.0)];
        assert_eq!(
            lagrange_predict(&s, 1.0),
            Err(EstimatorError::DuplicateTimes(0.0))
        );
        assert!(lagrange_weights(&[1.0, 1.0], 2.0).is_err());
    }

    #[test]
    fn target_must_be_ahead() {
        let s = [(0.0, 0.0), (1.0, 1.0)];
        assert!(matches!(
            lagrange_predict(&s, 0.5),
            Err(EstimatorError::TargetNotAhead { .. })
        ));
    }
}
