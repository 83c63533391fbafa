//! Coupling variables and the wiring between them.
//!
//! All subsystem inputs of a coupled system form one global input vector `u`,
//! all outputs one global output vector `y`. A [`ConnectionGraph`] realizes
//! `u = L y` with signed unit weights, and a [`PowerBond`] pairs outputs with
//! inputs whose products are physical powers.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Name and unit of a single coupling variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub label: String,
    pub unit: String,
}

impl Variable {
    pub fn new(label: impl Into<String>, unit: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            unit: unit.into(),
        }
    }
}

/// Ordered real-valued coupling variables with per-slot labels and units.
///
/// The layout is shared between all vectors of one simulation, so cloning a
/// vector only copies the values.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalVector {
    layout: Arc<[Variable]>,
    values: Vec<f64>,
}

impl SignalVector {
    pub fn new(layout: Arc<[Variable]>, values: Vec<f64>) -> Result<Self, SignalError> {
        if layout.len() != values.len() {
            return Err(SignalError::LengthMismatch {
                expected: layout.len(),
                actual: values.len(),
            });
        }
        Ok(Self { layout, values })
    }

    pub fn zeros(layout: Arc<[Variable]>) -> Self {
        let values = vec![0.0; layout.len()];
        Self { layout, values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn layout(&self) -> &Arc<[Variable]> {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Overwrite the values in place; the length is fixed.
    pub fn set_values(&mut self, values: &[f64]) -> Result<(), SignalError> {
        if values.len() != self.values.len() {
            return Err(SignalError::LengthMismatch {
                expected: self.values.len(),
                actual: values.len(),
            });
        }
        self.values.copy_from_slice(values);
        Ok(())
    }

    /// Index of the first non-finite value, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.values.iter().position(|v| !v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignalError {
    #[error("signal length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
}

/// Sign of a connection or bond orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// One edge of the connection graph: `u[input] = sign * y[output]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Connection {
    pub output: usize,
    pub input: usize,
    pub sign: Sign,
}

/// Violations reported by [`validate_graph`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("output index out of range: {output} (n_outputs = {n_outputs})")]
    OutputOutOfRange { output: usize, n_outputs: usize },
    #[error("input index out of range: {input} (n_inputs = {n_inputs})")]
    InputOutOfRange { input: usize, n_inputs: usize },
    #[error("duplicate driver for input {input}")]
    DuplicateDriver { input: usize },
    #[error("input {input} has no driver")]
    Undriven { input: usize },
    #[error("output vector has length {actual}, graph expects {expected}")]
    OutputLength { expected: usize, actual: usize },
}

/// Sparse signed mapping from outputs to inputs, `u = L y`.
///
/// Every input is driven by exactly one output; an output may drive any
/// number of inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionGraph {
    connections: Vec<Connection>,
    n_inputs: usize,
    n_outputs: usize,
    // driver[input] = (output, sign), filled once validated
    driver: Vec<(usize, f64)>,
}

impl ConnectionGraph {
    pub fn new(
        connections: Vec<Connection>,
        n_inputs: usize,
        n_outputs: usize,
    ) -> Result<Self, Vec<GraphError>> {
        let problems = validate_graph(&connections, n_inputs, n_outputs);
        if !problems.is_empty() {
            return Err(problems);
        }
        let mut driver = vec![(0, 0.0); n_inputs];
        for c in &connections {
            driver[c.input] = (c.output, c.sign.value());
        }
        Ok(Self {
            connections,
            n_inputs,
            n_outputs,
            driver,
        })
    }

    /// Shorthand for an all-positive graph given as `(output, input)` pairs.
    pub fn unsigned(
        pairs: &[(usize, usize)],
        n_inputs: usize,
        n_outputs: usize,
    ) -> Result<Self, Vec<GraphError>> {
        let connections = pairs
            .iter()
            .map(|&(output, input)| Connection {
                output,
                input,
                sign: Sign::Plus,
            })
            .collect();
        Self::new(connections, n_inputs, n_outputs)
    }

    pub fn connections(&self) -> &[Connection] {
        &self.connections
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    /// The output driving `input` and the sign applied to it.
    pub fn driver(&self, input: usize) -> (usize, f64) {
        self.driver[input]
    }

    /// Compute `u = L y` into `u`.
    pub fn apply_into(&self, y: &[f64], u: &mut [f64]) -> Result<(), GraphError> {
        if y.len() != self.n_outputs {
            return Err(GraphError::OutputLength {
                expected: self.n_outputs,
                actual: y.len(),
            });
        }
        debug_assert_eq!(u.len(), self.n_inputs);
        for (slot, &(output, sign)) in u.iter_mut().zip(&self.driver) {
            *slot = sign * y[output];
        }
        Ok(())
    }

    pub fn apply(&self, y: &[f64]) -> Result<Vec<f64>, GraphError> {
        let mut u = vec![0.0; self.n_inputs];
        self.apply_into(y, &mut u)?;
        Ok(u)
    }

    /// Dense `n_inputs x n_outputs` matrix form of `L`.
    pub fn to_matrix(&self) -> nalgebra::DMatrix<f64> {
        let mut l = nalgebra::DMatrix::zeros(self.n_inputs, self.n_outputs);
        for (input, &(output, sign)) in self.driver.iter().enumerate() {
            l[(input, output)] = sign;
        }
        l
    }
}

/// `u = L y` on signal vectors; the result takes the given input layout.
pub fn apply_connections(
    graph: &ConnectionGraph,
    y: &SignalVector,
    input_layout: Arc<[Variable]>,
) -> Result<SignalVector, GraphError> {
    let u = graph.apply(y.values())?;
    SignalVector::new(input_layout, u).map_err(|_| GraphError::OutputLength {
        expected: graph.n_inputs(),
        actual: y.len(),
    })
}

/// Check the graph invariants, returning every violation found.
pub fn validate_graph(
    connections: &[Connection],
    n_inputs: usize,
    n_outputs: usize,
) -> Vec<GraphError> {
    let mut problems = Vec::new();
    let mut driven = vec![0usize; n_inputs];
    for c in connections {
        if c.output >= n_outputs {
            problems.push(GraphError::OutputOutOfRange {
                output: c.output,
                n_outputs,
            });
        }
        if c.input >= n_inputs {
            problems.push(GraphError::InputOutOfRange {
                input: c.input,
                n_inputs,
            });
        } else {
            driven[c.input] += 1;
        }
    }
    for (input, &count) in driven.iter().enumerate() {
        match count {
            0 => problems.push(GraphError::Undriven { input }),
            1 => {}
            _ => problems.push(GraphError::DuplicateDriver { input }),
        }
    }
    problems
}

/// An output/input pairing on one subsystem's side of a power bond.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BondPort {
    pub output: usize,
    pub input: usize,
    pub orientation: Sign,
}

/// Oriented set of input–output pairs whose products are physical powers.
///
/// Orientations are chosen so that `sum(σ_k * y_k * u_k)` vanishes under exact
/// instantaneous coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerBond {
    pub label: String,
    pub ports: Vec<BondPort>,
}

impl PowerBond {
    pub fn new(label: impl Into<String>, ports: Vec<BondPort>) -> Self {
        Self {
            label: label.into(),
            ports,
        }
    }

    /// Check indices and that every port belongs to a different subsystem.
    ///
    /// `owner_of_output` / `owner_of_input` map global indices to subsystem ids.
    pub fn validate(
        &self,
        owner_of_output: &[usize],
        owner_of_input: &[usize],
    ) -> Result<(), BondError> {
        if self.ports.is_empty() {
            return Err(BondError::Empty(self.label.clone()));
        }
        let mut owners = Vec::with_capacity(self.ports.len());
        for p in &self.ports {
            let out_owner = *owner_of_output
                .get(p.output)
                .ok_or_else(|| BondError::OutOfRange(self.label.clone()))?;
            let in_owner = *owner_of_input
                .get(p.input)
                .ok_or_else(|| BondError::OutOfRange(self.label.clone()))?;
            if out_owner != in_owner {
                return Err(BondError::SplitPort(self.label.clone()));
            }
            if owners.contains(&out_owner) {
                return Err(BondError::SharedSubsystem(self.label.clone()));
            }
            owners.push(out_owner);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BondError {
    #[error("power bond '{0}' has no ports")]
    Empty(String),
    #[error("power bond '{0}' refers to a variable index out of range")]
    OutOfRange(String),
    #[error("power bond '{0}' pairs an output and an input of different subsystems")]
    SplitPort(String),
    #[error("power bond '{0}' has two ports on the same subsystem")]
    SharedSubsystem(String),
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}
