//! Local input error estimation: compare applied inputs against the values
//! that were held (extrapolated) during the step.

use nalgebra::{DMatrix, DVector};

use super::EstimatorError;
use crate::signals::ConnectionGraph;

/// Inputs whose correction matrix is worse conditioned than this are treated
/// as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Input error under zero-order hold: `Δu[i] = u[i] - u[i-1]`.
pub fn nepce_input_error(u_now: &[f64], u_prev: &[f64]) -> Result<Vec<f64>, EstimatorError> {
    if u_now.len() != u_prev.len() {
        return Err(EstimatorError::LengthMismatch {
            expected: u_prev.len(),
            actual: u_now.len(),
        });
    }
    Ok(u_now.iter().zip(u_prev).map(|(a, b)| a - b).collect())
}

/// Interface Jacobian `J_y[i][j] = ∂y_i/∂u_j` in global indices.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedthroughModel {
    n_inputs: usize,
    n_outputs: usize,
    entries: Vec<(usize, usize, f64)>,
    available: bool,
}

impl FeedthroughModel {
    /// `entries` are `(output, input, derivative)`.
    pub fn new(
        n_inputs: usize,
        n_outputs: usize,
        entries: Vec<(usize, usize, f64)>,
    ) -> Result<Self, EstimatorError> {
        for &(o, i, d) in &entries {
            if o >= n_outputs || i >= n_inputs || !d.is_finite() {
                return Err(EstimatorError::InvalidJacobian { output: o, input: i });
            }
        }
        Ok(Self {
            n_inputs,
            n_outputs,
            entries,
            available: true,
        })
    }

    /// Feed-through is declared somewhere but its derivatives are unknown.
    pub fn unavailable(n_inputs: usize, n_outputs: usize) -> Self {
        Self {
            n_inputs,
            n_outputs,
            entries: Vec::new(),
            available: false,
        }
    }

    pub fn is_available(&self) -> bool {
        self.available
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn jacobian(&self) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.n_outputs, self.n_inputs);
        for &(o, i, d) in &self.entries {
            j[(o, i)] += d;
        }
        j
    }

    /// `I - L J_y`, checked for conditioning.
    pub fn correction_matrix(&self, graph: &ConnectionGraph) -> Result<DMatrix<f64>, EstimatorError> {
        if !self.available {
            return Err(EstimatorError::FeedthroughUnavailable);
        }
        let n = graph.n_inputs();
        let m = DMatrix::identity(n, n) - graph.to_matrix() * self.jacobian();
        let sv = m.singular_values();
        let (hi, lo) = sv
            .iter()
            .fold((0.0f64, f64::INFINITY), |(hi, lo), &s| (hi.max(s), lo.min(s)));
        let condition = if n == 0 { 1.0 } else { hi / lo };
        if condition.is_nan() || condition > MAX_CONDITION {
            return Err(EstimatorError::SingularFeedthrough { condition });
        }
        Ok(m)
    }
}

/// Solve `(I - L J_y) Δu = Δu_raw` to account for direct feed-through.
pub fn nepce_feedthrough_correction(
    raw: &[f64],
    graph: &ConnectionGraph,
    feedthrough: &FeedthroughModel,
) -> Result<Vec<f64>, EstimatorError> {
    if raw.len() != graph.n_inputs() {
        return Err(EstimatorError::LengthMismatch {
            expected: graph.n_inputs(),
            actual: raw.len(),
        });
    }
    if feedthrough.is_available() && feedthrough.entries().is_empty() {
        return Ok(raw.to_vec());
    }
    let m = feedthrough.correction_matrix(graph)?;
    solve(&m, raw)
}

pub(crate) fn solve(m: &DMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>, EstimatorError> {
    m.clone()
        .lu()
        .solve(&DVector::from_column_slice(rhs))
        .map(|x| x.iter().copied().collect())
        .ok_or(EstimatorError::SingularFeedthrough {
            condition: f64::INFINITY,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{Connection, Sign};

    fn crossed() -> ConnectionGraph {
        ConnectionGraph::unsigned(&[(0, 1), (1, 0)], 2, 2).unwrap()
    }

    #[test]
    fn zoh_difference() {
        assert_eq!(
            nepce_input_error(&[3.0, -1.0], &[1.0, -1.0]).unwrap(),
            vec![2.0, 0.0]
        );
        assert_eq!(
            nepce_input_error(&[1.5, 2.5], &[1.5, 2.5]).unwrap(),
            vec![0.0, 0.0]
        );
        assert!(nepce_input_error(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn no_feedthrough_is_identity() {
        let ft = FeedthroughModel::new(2, 2, vec![]).unwrap();
        let out = nepce_feedthrough_correction(&[0.3, -7.0], &crossed(), &ft).unwrap();
        assert_eq!(out, vec![0.3, -7.0]);
    }

    /// Cramer's rule on a 2x2 system, written out independently.
    fn cramer(a: [[f64; 2]; 2], b: [f64; 2]) -> [f64; 2] {
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        [
            (b[0] * a[1][1] - a[0][1] * b[1]) / det,
            (a[0][0] * b[1] - b[0] * a[1][0]) / det,
        ]
    }

    #[test]
    fn damper_feedthrough_on_crossed_graph() {
        // mass v -> spring input 1, spring F -> mass input 0; ∂F/∂v_in = -d
        let d = 40.0;
        let ft = FeedthroughModel::new(2, 2, vec![(1, 1, -d)]).unwrap();
        let raw = [12.5, -0.3];
        let out = nepce_feedthrough_correction(&raw, &crossed(), &ft).unwrap();
        // I - L J: row 0 picks J row 1 = (0, -d), row 1 picks J row 0 = 0
        let expected = cramer([[1.0, d], [0.0, 1.0]], raw);
        for (o, e) in out.iter().zip(expected) {
            assert!((o - e).abs() <= 1e-12 * e.abs().max(1.0));
        }
    }

    #[test]
    fn full_two_by_two_against_cramer() {
        let ft = FeedthroughModel::new(2, 2, vec![(0, 0, 0.2), (0, 1, -0.7), (1, 0, 1.3), (1, 1, 0.4)])
            .unwrap();
        let g = crossed();
        let raw = [1.0, -2.0];
        let out = nepce_feedthrough_correction(&raw, &g, &ft).unwrap();
        // L swaps rows of J: L J = [[1.3, 0.4], [0.2, -0.7]]
        let a = [[1.0 - 1.3, -0.4], [-0.2, 1.0 + 0.7]];
        let expected = cramer(a, raw);
        for (o, e) in out.iter().zip(expected) {
            assert!((o - e).abs() <= 1e-12 * e.abs().max(1.0));
        }
    }

    #[test]
    fn singular_correction_is_an_error() {
        let g = ConnectionGraph::new(
            vec![Connection {
                output: 0,
                input: 0,
                sign: Sign::Plus,
            }],
            1,
            1,
        )
        .unwrap();
        let ft = FeedthroughModel::new(1, 1, vec![(0, 0, 1.0)]).unwrap();
        assert!(matches!(
            nepce_feedthrough_correction(&[1.0], &g, &ft),
            Err(EstimatorError::SingularFeedthrough { .. })
        ));
    }

    #[test]
    fn unavailable_jacobian_is_an_error() {
        let ft = FeedthroughModel::unavailable(2, 2);
        assert_eq!(
            nepce_feedthrough_correction(&[1.0, 1.0], &crossed(), &ft),
            Err(EstimatorError::FeedthroughUnavailable)
        );
    }
}
