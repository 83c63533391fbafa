//! Explicit predictor/corrector: compare a new output against a Lagrange
//! extrapolation from earlier synchronization points.

use super::lagrange::lagrange_predict;
use super::EstimatorError;

/// `y_now - ỹ(t_now)`, where `ỹ` extrapolates the last `order + 1` samples.
///
/// Returns `Ok(None)` while fewer than `order + 1` past samples exist.
pub fn predictor_output_error(
    history: &[(f64, f64)],
    y_now: f64,
    t_now: f64,
    order: usize,
) -> Result<Option<f64>, EstimatorError> {
    if order == 0 {
        return Err(EstimatorError::InvalidOrder(order));
    }
    let needed = order + 1;
    if history.len() < needed {
        return Ok(None);
    }
    let window = &history[history.len() - needed..];
    let predicted = lagrange_predict(window, t_now)?;
    Ok(Some(y_now - predicted))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_is_predicted_exactly() {
        let h = [(0.0, 1.0), (0.1, 1.5)];
        let e = predictor_output_error(&h, 2.0, 0.2, 1).unwrap().unwrap();
        assert!(e.abs() < 1e-12);
    }

    #[test]
    fn second_difference_example() {
        // 4 - 2 * 1 + 0
        let h = [(0.0, 0.0), (1.0, 1.0)];
        assert_eq!(predictor_output_error(&h, 4.0, 2.0, 1).unwrap(), Some(2.0));
    }

    #[test]
    fn warm_up_reports_nothing() {
        let h = [(0.0, 0.0)];
        assert_eq!(predictor_output_error(&h, 1.0, 1.0, 1).unwrap(), None);
        assert_eq!(predictor_output_error(&[], 1.0, 1.0, 2).unwrap(), None);
    }

    #[test]
    fn uses_most_recent_window() {
        // only the last two samples matter for r = 1
        let h = [(0.0, 100.0), (1.0, 1.0), (2.0, 2.0)];
        assert_eq!(predictor_output_error(&h, 3.0, 3.0, 1).unwrap(), Some(0.0));
    }
}
