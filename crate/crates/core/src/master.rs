//! Jacobi master algorithms: fixed-step and adaptive orchestration loops,
//! step-size sweeps, and comparison against a monolithic reference.

use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use crate::controller::{ControllerConfig, ControllerError, PiController};
use crate::estimators::{
    ecco_residual_energy, ecco_residual_power, BondResidual, Dimensions, ErrorEstimator,
    EstimatorError, FeedthroughModel, SyncPoint,
};
use crate::exec;
use crate::history::{HistoryEntry, StepHistory};
use crate::indicator::{ErrorIndicator, IndicatorError};
use crate::signals::{BondError, ConnectionGraph, GraphError, PowerBond, Variable};
use crate::subsystem::{Subsystem, SubsystemError, DIVERGENCE_LIMIT};
use crate::subsystems::{MonolithicError, MonolithicSeries};

/// A remainder to `t_stop` shorter than this fraction of the macro step is
/// merged into the step instead of producing a sliver.
const END_SNAP: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MasterError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Bond(#[from] BondError),
    #[error("estimator failed at t = {t}: {source}")]
    Estimator { t: f64, source: EstimatorError },
    #[error("indicator failed at t = {t}: {source}")]
    Indicator { t: f64, source: IndicatorError },
    #[error("controller failed at step {step} (t = {t}): {source}")]
    Controller {
        step: usize,
        t: f64,
        source: ControllerError,
    },
    #[error("subsystem error: {0}")]
    Subsystem(SubsystemError),
    #[error("mode mismatch: scenario is {0}")]
    Mode(&'static str),
}

/// How macro steps are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stepping {
    Fixed { dt: f64 },
    Adaptive(ControllerConfig),
}

/// A configured estimator together with the indicator that condenses its
/// local errors into `ε`.
pub struct IndicatorSetup {
    pub estimator: Box<dyn ErrorEstimator>,
    pub indicator: ErrorIndicator,
}

/// A complete co-simulation setup, ready to run once.
pub struct Scenario {
    pub name: String,
    pub subsystems: Vec<Box<dyn Subsystem>>,
    /// Routes the global output vector to the global input vector.
    pub graph: ConnectionGraph,
    pub bonds: Vec<PowerBond>,
    /// Inputs for the first step; `L y(t_start)` when absent.
    pub u_start: Option<Vec<f64>>,
    pub t_start: f64,
    pub t_stop: f64,
    pub stepping: Stepping,
    /// Required in adaptive mode; in fixed mode `ε` is only recorded.
    pub indicator: Option<IndicatorSetup>,
    /// Step subsystems concurrently within a macro step.
    pub parallel: bool,
}

/// Global variable layout derived from the subsystem list.
#[derive(Debug, Clone)]
pub struct Layout {
    pub inputs: Arc<[Variable]>,
    pub outputs: Arc<[Variable]>,
    /// Start of each subsystem's block in the global input vector.
    pub input_offsets: Vec<usize>,
    pub output_offsets: Vec<usize>,
    pub bond_labels: Vec<String>,
}

impl Layout {
    fn new(subsystems: &[Box<dyn Subsystem>], bonds: &[PowerBond]) -> Self {
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        let mut input_offsets = Vec::with_capacity(subsystems.len() + 1);
        let mut output_offsets = Vec::with_capacity(subsystems.len() + 1);
        for s in subsystems {
            input_offsets.push(inputs.len());
            output_offsets.push(outputs.len());
            inputs.extend_from_slice(s.inputs());
            outputs.extend_from_slice(s.outputs());
        }
        input_offsets.push(inputs.len());
        output_offsets.push(outputs.len());
        Self {
            inputs: inputs.into(),
            outputs: outputs.into(),
            input_offsets,
            output_offsets,
            bond_labels: bonds.iter().map(|b| b.label.clone()).collect(),
        }
    }

    fn owners(offsets: &[usize]) -> Vec<usize> {
        let mut owners = Vec::new();
        for (id, w) in offsets.windows(2).enumerate() {
            owners.extend(std::iter::repeat_n(id, w[1] - w[0]));
        }
        owners
    }

    /// Subsystem index owning each global output.
    pub fn output_owners(&self) -> Vec<usize> {
        Self::owners(&self.output_offsets)
    }

    /// Subsystem index owning each global input.
    pub fn input_owners(&self) -> Vec<usize> {
        Self::owners(&self.input_offsets)
    }
}

/// State of the coupled system at one synchronization point.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    /// Length of the step that ended at `t`; zero for the initial record.
    pub dt: f64,
    /// Inputs applied during the step that starts at `t`.
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub eps: f64,
    /// Residual power per bond [W].
    pub delta_p: Vec<f64>,
    /// Residual energy per bond over the step ending at `t` [J].
    pub delta_e: Vec<f64>,
    /// Sum of subsystem energies, when every subsystem reports one.
    pub energy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    pub t: f64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Run {
    pub layout: Layout,
    pub records: Vec<StepRecord>,
    pub divergence: Option<Divergence>,
}

impl Run {
    /// Number of macro steps taken.
    pub fn steps(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn final_time(&self) -> Option<f64> {
        self.records.last().map(|r| r.t)
    }

    /// Sum of residual energies over all bonds and steps.
    pub fn cumulative_delta_e(&self) -> f64 {
        self.records.iter().flat_map(|r| &r.delta_e).sum()
    }

    /// Sum of absolute residual energies over all bonds and steps.
    pub fn cumulative_abs_delta_e(&self) -> f64 {
        self.records.iter().flat_map(|r| &r.delta_e).map(|e| e.abs()).sum()
    }
}

impl Scenario {
    /// Check the scenario's internal consistency.
    pub fn validate(&self) -> Result<Layout, MasterError> {
        let layout = Layout::new(&self.subsystems, &self.bonds);
        if self.graph.n_inputs() != layout.inputs.len() || self.graph.n_outputs() != layout.outputs.len()
        {
            return Err(MasterError::Config(format!(
                "graph is {}x{} but subsystems declare {} inputs and {} outputs",
                self.graph.n_inputs(),
                self.graph.n_outputs(),
                layout.inputs.len(),
                layout.outputs.len()
            )));
        }
        if !(self.t_start.is_finite() && self.t_stop.is_finite()) {
            return Err(MasterError::Config("t_start and t_stop must be finite".into()));
        }
        if self.t_stop < self.t_start {
            return Err(MasterError::Config(format!(
                "t_stop ({}) precedes t_start ({})",
                self.t_stop, self.t_start
            )));
        }
        if let Some(u) = &self.u_start {
            if u.len() != layout.inputs.len() {
                return Err(MasterError::Config(format!(
                    "u_start has {} values, expected {}",
                    u.len(),
                    layout.inputs.len()
                )));
            }
        }
        let (out_owner, in_owner) = (layout.output_owners(), layout.input_owners());
        for b in &self.bonds {
            b.validate(&out_owner, &in_owner)?;
        }
        match self.stepping {
            Stepping::Fixed { dt } if !(dt > 0.0 && dt.is_finite()) => {
                return Err(MasterError::Config(format!("dt must be positive, got {dt}")));
            }
            Stepping::Adaptive(cfg) => {
                cfg.validate().map_err(|e| MasterError::Config(e.to_string()))?;
                if self.indicator.is_none() {
                    return Err(MasterError::Config(
                        "adaptive stepping needs an error estimator and indicator".into(),
                    ));
                }
            }
            Stepping::Fixed { .. } => {}
        }
        if let Some(setup) = &self.indicator {
            let dims = Dimensions {
                n_inputs: layout.inputs.len(),
                n_outputs: layout.outputs.len(),
                n_bonds: self.bonds.len(),
            };
            if setup.estimator.name() == "ecco" && self.bonds.is_empty() {
                return Err(MasterError::Config("the ecco estimator needs at least one power bond".into()));
            }
            let count = setup.estimator.error_count(dims);
            if count != setup.indicator.tolerances.len() {
                return Err(MasterError::Config(format!(
                    "{} estimator yields {count} errors but {} tolerances are configured",
                    setup.estimator.name(),
                    setup.indicator.tolerances.len()
                )));
            }
        }
        Ok(layout)
    }

    /// Largest input-extrapolation order across subsystems.
    pub fn extrapolation_order(&self) -> usize {
        self.subsystems
            .iter()
            .map(|s| s.extrapolation_order())
            .max()
            .unwrap_or(0)
    }

    /// Declared feed-through in global indices. Unavailable when any
    /// declared entry lacks a derivative.
    pub fn feedthrough_model(&self) -> FeedthroughModel {
        let layout = Layout::new(&self.subsystems, &self.bonds);
        let (n_in, n_out) = (layout.inputs.len(), layout.outputs.len());
        let mut entries = Vec::new();
        for (id, s) in self.subsystems.iter().enumerate() {
            for ft in s.feedthrough() {
                let Some(d) = ft.derivative else {
                    return FeedthroughModel::unavailable(n_in, n_out);
                };
                entries.push((
                    layout.output_offsets[id] + ft.output,
                    layout.input_offsets[id] + ft.input,
                    d,
                ));
            }
        }
        FeedthroughModel::new(n_in, n_out, entries)
            .unwrap_or_else(|_| FeedthroughModel::unavailable(n_in, n_out))
    }
}

fn collect_outputs(subsystems: &[Box<dyn Subsystem>], layout: &Layout, y: &mut [f64]) {
    for (id, s) in subsystems.iter().enumerate() {
        let range = layout.output_offsets[id]..layout.output_offsets[id + 1];
        s.get_outputs(&mut y[range]);
    }
}

fn total_energy(subsystems: &[Box<dyn Subsystem>]) -> Option<f64> {
    subsystems.iter().map(|s| s.energy()).sum()
}

fn check_outputs(layout: &Layout, y: &[f64]) -> Option<String> {
    y.iter().enumerate().find_map(|(k, &v)| {
        (!v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
            .then(|| format!("output {} became {v}", layout.outputs[k].label))
    })
}

/// Run the scenario in whatever mode it is configured for.
pub fn run(scenario: Scenario) -> Result<Run, MasterError> {
    let layout = scenario.validate()?;
    let Scenario {
        subsystems: mut systems,
        graph,
        bonds,
        u_start,
        t_start,
        t_stop,
        stepping,
        mut indicator,
        parallel,
        ..
    } = scenario;
    let m = systems.iter().map(|s| s.extrapolation_order()).max().unwrap_or(0);

    let mut controller = match stepping {
        Stepping::Adaptive(cfg) => Some(PiController::new(cfg).map_err(|e| {
            MasterError::Config(e.to_string())
        })?),
        Stepping::Fixed { .. } => None,
    };
    let mut dt = match (&stepping, &controller) {
        (Stepping::Fixed { dt }, _) => *dt,
        (_, Some(c)) => c.config().start_step(),
        _ => unreachable!("adaptive stepping always has a controller"),
    };

    let depth = indicator.as_ref().map_or(0, |s| s.estimator.history_depth());
    let mut history = StepHistory::with_capacity(depth.max(1) + 1);

    let n_out = layout.outputs.len();
    let mut y = vec![0.0; n_out];
    collect_outputs(&systems, &layout, &mut y);
    let mut u = match u_start {
        Some(u) => u,
        None => graph.apply(&y)?,
    };

    let mut records = Vec::new();
    let zero_bonds = vec![0.0; bonds.len()];
    if let Some(reason) = check_outputs(&layout, &y) {
        return Ok(Run {
            layout,
            records,
            divergence: Some(Divergence { t: t_start, reason }),
        });
    }
    records.push(StepRecord {
        t: t_start,
        dt: 0.0,
        u: u.clone(),
        y: y.clone(),
        eps: 0.0,
        delta_p: zero_bonds.clone(),
        delta_e: zero_bonds,
        energy: total_energy(&systems),
    });
    history
        .push(HistoryEntry {
            t: t_start,
            dt: 0.0,
            u: u.clone(),
            y: y.clone(),
            eps: 0.0,
        })
        .expect("history starts empty");

    let mut t = t_start;
    let mut divergence = None;
    let mut residuals: Vec<BondResidual> = Vec::with_capacity(bonds.len());
    let mut step = 0usize;
    while t < t_stop {
        step += 1;
        let mut t_next = (t + dt).min(t_stop);
        if t_stop - t_next <= END_SNAP * dt {
            t_next = t_stop;
        }
        let h = t_next - t;

        let offsets = &layout.input_offsets;
        let u_ref = &u;
        let stepped = exec::try_for_each_mut(&mut systems, parallel, |id, s| {
            s.set_inputs(&u_ref[offsets[id]..offsets[id + 1]])?;
            s.do_step(h)
        });
        match stepped {
            Ok(()) => {}
            Err(e @ SubsystemError::Diverged { .. }) => {
                divergence = Some(Divergence {
                    t: t_next,
                    reason: e.to_string(),
                });
                break;
            }
            Err(e) => return Err(MasterError::Subsystem(e)),
        }
        t = t_next;

        collect_outputs(&systems, &layout, &mut y);
        if let Some(reason) = check_outputs(&layout, &y) {
            divergence = Some(Divergence { t, reason });
            break;
        }
        let u_next = graph.apply(&y)?;

        residuals.clear();
        residuals.extend(bonds.iter().map(|b| {
            let power = ecco_residual_power(b, &y, &u);
            BondResidual {
                label: b.label.clone(),
                t,
                power,
                energy: ecco_residual_energy(power, h, m),
            }
        }));

        let mut eps = 0.0;
        if let Some(setup) = indicator.as_mut() {
            let point = SyncPoint {
                t,
                dt: h,
                u_held: &u,
                u_next: &u_next,
                y: &y,
                history: &history,
                bonds: &bonds,
                residuals: &residuals,
            };
            let local = setup
                .estimator
                .estimate(&point)
                .map_err(|source| MasterError::Estimator { t, source })?;
            if let Some(local) = local {
                eps = setup
                    .indicator
                    .evaluate(&local)
                    .map_err(|source| MasterError::Indicator { t, source })?;
            }
        }

        if let Some(c) = controller.as_mut() {
            // dt is the step the controller chose, even if h was shortened to hit t_stop
            dt = c
                .next_step_size(dt, eps)
                .map_err(|source| MasterError::Controller { step, t, source })?;
        }

        records.push(StepRecord {
            t,
            dt: h,
            u: u_next.clone(),
            y: y.clone(),
            eps,
            delta_p: residuals.iter().map(|r| r.power).collect(),
            delta_e: residuals.iter().map(|r| r.energy).collect(),
            energy: total_energy(&systems),
        });
        history
            .push(HistoryEntry {
                t,
                dt: h,
                u: u_next.clone(),
                y: y.clone(),
                eps,
            })
            .map_err(|e| MasterError::Config(e.to_string()))?;
        u = u_next;
    }

    if let Some(d) = &divergence {
        log::warn!("run diverged at t = {}: {}", d.t, d.reason);
    }
    Ok(Run {
        layout,
        records,
        divergence,
    })
}

/// Fixed-step Jacobi loop; rejects adaptive scenarios.
pub fn run_fixed(scenario: Scenario) -> Result<Run, MasterError> {
    match scenario.stepping {
        Stepping::Fixed { .. } => run(scenario),
        Stepping::Adaptive(_) => Err(MasterError::Mode("adaptive")),
    }
}

/// Adaptive loop with estimator, indicator and PI controller.
pub fn run_adaptive(scenario: Scenario) -> Result<Run, MasterError> {
    match scenario.stepping {
        Stepping::Adaptive(_) => run(scenario),
        Stepping::Fixed { .. } => Err(MasterError::Mode("fixed")),
    }
}

/// Differences between a co-simulation and its monolithic reference at every
/// synchronization point.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub t: Vec<f64>,
    /// `dy[i][k] = y_k[i] - y0_k[i]`.
    pub dy: Vec<Vec<f64>>,
    pub energy_cosim: Vec<Option<f64>>,
    pub energy_mono: Vec<f64>,
}

impl Comparison {
    /// `E_cosim - E_mono` where the co-simulation reports energy.
    pub fn energy_error(&self) -> Vec<Option<f64>> {
        self.energy_cosim
            .iter()
            .zip(&self.energy_mono)
            .map(|(c, m)| c.map(|c| c - m))
            .collect()
    }

    /// Largest `|dy_k|` over all points, per output.
    pub fn max_abs(&self) -> Vec<f64> {
        let n = self.dy.first().map_or(0, Vec::len);
        (0..n)
            .map(|k| self.dy.iter().fold(0.0, |m: f64, d| m.max(d[k].abs())))
            .collect()
    }
}

pub fn compare_with_reference(
    records: &[StepRecord],
    reference: &MonolithicSeries,
) -> Result<Comparison, MonolithicError> {
    let mut cmp = Comparison {
        t: Vec::with_capacity(records.len()),
        dy: Vec::with_capacity(records.len()),
        energy_cosim: Vec::with_capacity(records.len()),
        energy_mono: Vec::with_capacity(records.len()),
    };
    for r in records {
        let (y0, e0) = reference.sample_at(r.t)?;
        cmp.t.push(r.t);
        cmp.dy.push(r.y.iter().zip(&y0).map(|(a, b)| a - b).collect());
        cmp.energy_cosim.push(r.energy);
        cmp.energy_mono.push(e0);
    }
    Ok(cmp)
}

/// One row of a step-size sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub dt: f64,
    pub cumulative_abs_delta_e: f64,
    pub cumulative_delta_e: f64,
    pub diverged: bool,
    pub diverged_at: Option<f64>,
    pub steps: usize,
    pub wall_time: f64,
}

/// One fixed-step run per `dt`, built by `build`. Rows come back ordered by
/// `dt` whatever order the runs finish in.
pub fn sweep<F>(build: F, dts: &[f64], parallel: bool) -> Result<Vec<SweepRow>, MasterError>
where
    F: Fn(f64) -> Result<Scenario, MasterError> + Sync + Send,
{
    let mut sorted = dts.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rows = exec::map(&sorted, parallel, |&dt| -> Result<SweepRow, MasterError> {
        let started = Instant::now();
        let run = run_fixed(build(dt)?)?;
        Ok(SweepRow {
            dt,
            cumulative_abs_delta_e: run.cumulative_abs_delta_e(),
            cumulative_delta_e: run.cumulative_delta_e(),
            diverged: run.divergence.is_some(),
            diverged_at: run.divergence.as_ref().map(|d| d.t),
            steps: run.steps(),
            wall_time: started.elapsed().as_secs_f64(),
        })
    });
    rows.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subsystems::{Clock, Echo};

    fn probe_scenario(t_stop: f64, dt: f64) -> Scenario {
        // clock output drives the echo input; echo output drives the clock
        let graph = ConnectionGraph::unsigned(&[(0, 1), (1, 0)], 2, 2).unwrap();
        Scenario {
            name: "probe".into(),
            subsystems: vec![Box::new(Clock::new("clock", 0.0)), Box::new(Echo::new("echo", 0.0))],
            graph,
            bonds: vec![],
            u_start: None,
            t_start: 0.0,
            t_stop,
            stepping: Stepping::Fixed { dt },
            indicator: None,
            parallel: false,
        }
    }

    #[test]
    fn sync_times_end_on_t_stop() {
        let run = run(probe_scenario(1.0, 0.3)).unwrap();
        let times: Vec<f64> = run.records.iter().map(|r| r.t).collect();
        assert_eq!(times.len(), 5);
        assert_eq!(*times.last().unwrap(), 1.0);
        for (got, want) in times.iter().zip([0.0, 0.3, 0.6, 0.9, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_length_run_has_initial_record_only() {
        let run = run(probe_scenario(0.0, 0.3)).unwrap();
        assert_eq!(run.records.len(), 1);
        assert_eq!(run.steps(), 0);
    }

    #[test]
    fn echo_lags_by_one_step() {
        let run = run(probe_scenario(1.0, 0.1)).unwrap();
        for w in run.records.windows(2) {
            assert_eq!(w[1].y[1], w[0].y[0]);
        }
    }

    #[test]
    fn adaptive_requires_indicator() {
        let mut s = probe_scenario(1.0, 0.1);
        s.stepping = Stepping::Adaptive(ControllerConfig::default());
        assert!(matches!(s.validate(), Err(MasterError::Config(_))));
    }

    #[test]
    fn rejects_reversed_span() {
        let s = probe_scenario(-1.0, 0.1);
        assert!(matches!(run(s), Err(MasterError::Config(_))));
    }

    #[test]
    fn mode_guards() {
        assert!(matches!(run_adaptive(probe_scenario(1.0, 0.1)), Err(MasterError::Mode(_))));
    }
}
