//! Co-simulation master algorithms for black-box subsystems.
//!
//! Subsystems are coupled through a signed connection graph and stepped with
//! the Jacobi scheme. Macro steps are either fixed or chosen by a PI
//! controller from a rollback-free estimate of the local coupling error
//! (input differences, output prediction, or energy residuals over power
//! bonds).

pub mod cli;
pub mod controller;
pub mod estimators;
pub mod exec;
pub mod history;
pub mod indicator;
pub mod master;
pub mod scenarios;
pub mod signals;
pub mod subsystem;
pub mod subsystems;

pub use controller::{compact_reference, ControllerConfig, ControllerState, PiController};
pub use indicator::{aggregate, normalize, scaled_tolerances, AggregationKind, ErrorIndicator, ToleranceSet};
pub use master::{
    compare_with_reference, run, run_adaptive, run_fixed, sweep, Comparison, Run, Scenario,
    StepRecord, Stepping, SweepRow,
};
pub use scenarios::{attach_indicator, Builtin, EstimatorKind, OscillatorParams, QuarterCarSetup};
pub use signals::{
    apply_connections, validate_graph, Connection, ConnectionGraph, PowerBond, Sign, SignalVector,
    Variable,
};
pub use subsystem::Subsystem;
