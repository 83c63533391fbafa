//! Builtin coupled systems: the two-body oscillator (undamped and damped)
//! and the quarter car, each with a monolithic reference.

use serde::{Deserialize, Serialize};

use crate::estimators::{EccoEstimator, ErrorEstimator, NepceEstimator, PredictorEstimator};
use crate::indicator::{AggregationKind, ErrorIndicator, ToleranceSet};
use crate::master::{IndicatorSetup, MasterError, Scenario, Stepping};
use crate::signals::{BondPort, ConnectionGraph, PowerBond, Sign};
use crate::subsystems::{
    run_monolithic, ChassisSubsystem, MassSubsystem, MonolithicError, MonolithicOscillator,
    MonolithicQuarterCar, MonolithicSeries, QuarterCarParams, QuarterCarState,
    SpringDamperSubsystem, SuspensionWheelSubsystem,
};

/// Mass coupled to a spring–damper through force and velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OscillatorParams {
    /// [kg]
    pub mass: f64,
    /// [N/m]
    pub stiffness: f64,
    /// [N s/m]
    pub damping: f64,
    /// Initial spring elongation and mass position [m].
    pub position: f64,
    /// [m/s]
    pub velocity: f64,
    /// [s]
    pub micro_dt: f64,
}

impl Default for OscillatorParams {
    fn default() -> Self {
        Self {
            mass: 100.0,
            stiffness: 1e3,
            damping: 0.0,
            position: 1.0,
            velocity: 0.0,
            micro_dt: 1e-4,
        }
    }
}

impl OscillatorParams {
    pub fn damped() -> Self {
        Self {
            damping: 40.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        positive("mass", self.mass)?;
        positive("stiffness", self.stiffness)?;
        positive("micro_dt", self.micro_dt)?;
        if !(self.damping >= 0.0 && self.damping.is_finite()) {
            return Err(format!("damping must be non-negative, got {}", self.damping));
        }
        finite("position", self.position)?;
        finite("velocity", self.velocity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuarterCarSetup {
    pub params: QuarterCarParams,
    pub initial: QuarterCarState,
    pub micro_dt: f64,
}

impl Default for QuarterCarSetup {
    fn default() -> Self {
        Self {
            params: QuarterCarParams::default(),
            initial: QuarterCarState::default(),
            micro_dt: 1e-4,
        }
    }
}

impl QuarterCarSetup {
    pub fn validate(&self) -> Result<(), String> {
        let p = &self.params;
        positive("chassis_mass", p.chassis_mass)?;
        positive("wheel_mass", p.wheel_mass)?;
        positive("suspension_stiffness", p.suspension_stiffness)?;
        positive("suspension_damping", p.suspension_damping)?;
        positive("tyre_stiffness", p.tyre_stiffness)?;
        positive("micro_dt", self.micro_dt)?;
        let s = &self.initial;
        finite("chassis_position", s.chassis_position)?;
        finite("chassis_velocity", s.chassis_velocity)?;
        finite("wheel_position", s.wheel_position)?;
        finite("wheel_velocity", s.wheel_velocity)
    }
}

fn positive(name: &str, v: f64) -> Result<(), String> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("{name} must be positive, got {v}"))
    }
}

fn finite(name: &str, v: f64) -> Result<(), String> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(format!("{name} must be finite, got {v}"))
    }
}

/// A builtin coupled system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builtin {
    Oscillator(OscillatorParams),
    QuarterCar(QuarterCarSetup),
}

/// Crossed force/velocity wiring shared by both builtins: global outputs are
/// `(v, F)`, global inputs `(F, v)`.
fn force_velocity_coupling() -> (ConnectionGraph, PowerBond) {
    let graph = ConnectionGraph::unsigned(&[(1, 0), (0, 1)], 2, 2).expect("static wiring");
    let bond = PowerBond::new(
        "force-velocity",
        vec![
            BondPort {
                output: 0,
                input: 0,
                orientation: Sign::Minus,
            },
            BondPort {
                output: 1,
                input: 1,
                orientation: Sign::Plus,
            },
        ],
    );
    (graph, bond)
}

impl Builtin {
    pub fn name(&self) -> &'static str {
        match self {
            Builtin::Oscillator(p) if p.damping > 0.0 => "mass_spring_damped",
            Builtin::Oscillator(_) => "mass_spring",
            Builtin::QuarterCar(_) => "quarter_car",
        }
    }

    pub fn micro_dt(&self) -> f64 {
        match self {
            Builtin::Oscillator(p) => p.micro_dt,
            Builtin::QuarterCar(q) => q.micro_dt,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            Builtin::Oscillator(p) => p.validate(),
            Builtin::QuarterCar(q) => q.validate(),
        }
    }

    /// A scenario without error indication; attach one with
    /// [`attach_indicator`] if needed.
    pub fn scenario(&self, t_start: f64, t_stop: f64, stepping: Stepping) -> Scenario {
        let (graph, bond) = force_velocity_coupling();
        let subsystems: Vec<Box<dyn crate::subsystem::Subsystem>> = match *self {
            Builtin::Oscillator(p) => vec![
                Box::new(MassSubsystem::new("mass", p.mass, p.position, p.velocity, p.micro_dt)),
                Box::new(SpringDamperSubsystem::new(
                    "spring",
                    p.stiffness,
                    p.damping,
                    p.position,
                    p.micro_dt,
                )),
            ],
            Builtin::QuarterCar(q) => vec![
                Box::new(ChassisSubsystem::new(
                    "chassis",
                    q.params.chassis_mass,
                    q.initial.chassis_position,
                    q.initial.chassis_velocity,
                    q.micro_dt,
                )),
                Box::new(SuspensionWheelSubsystem::new(
                    "suspension",
                    q.params,
                    q.initial.chassis_position,
                    q.initial.wheel_position,
                    q.initial.wheel_velocity,
                    q.micro_dt,
                )),
            ],
        };
        Scenario {
            name: self.name().to_owned(),
            subsystems,
            graph,
            bonds: vec![bond],
            u_start: None,
            t_start,
            t_stop,
            stepping,
            indicator: None,
            parallel: false,
        }
    }

    /// Monolithic forward-Euler run sampled at every solver step and at every
    /// time in `breakpoints`.
    pub fn reference(
        &self,
        t_start: f64,
        t_stop: f64,
        breakpoints: &[f64],
    ) -> Result<MonolithicSeries, MonolithicError> {
        match *self {
            Builtin::Oscillator(p) => {
                let mut model = MonolithicOscillator {
                    mass: p.mass,
                    stiffness: p.stiffness,
                    damping: p.damping,
                    position: p.position,
                    velocity: p.velocity,
                };
                run_monolithic(&mut model, t_start, t_stop, p.micro_dt, breakpoints)
            }
            Builtin::QuarterCar(q) => {
                let mut model = MonolithicQuarterCar {
                    params: q.params,
                    state: q.initial,
                };
                run_monolithic(&mut model, t_start, t_stop, q.micro_dt, breakpoints)
            }
        }
    }
}

/// Which local error estimator drives the indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EstimatorKind {
    Nepce {
        /// Correct for direct feed-through using declared interface derivatives.
        #[serde(default)]
        feedthrough_correction: bool,
    },
    Predictor,
    Ecco,
}

impl Default for EstimatorKind {
    fn default() -> Self {
        EstimatorKind::Nepce {
            feedthrough_correction: false,
        }
    }
}

impl EstimatorKind {
    /// Error order `p` for a scenario with extrapolation order `m`.
    pub fn order(&self, m: usize, has_feedthrough: bool) -> usize {
        match self {
            EstimatorKind::Nepce { .. } => m + 1,
            EstimatorKind::Predictor if has_feedthrough => m + 1,
            EstimatorKind::Predictor | EstimatorKind::Ecco => m + 2,
        }
    }
}

/// Build the estimator for `scenario` and attach it with the given tolerances.
pub fn attach_indicator(
    scenario: &mut Scenario,
    kind: EstimatorKind,
    tolerances: ToleranceSet,
    aggregation: AggregationKind,
) -> Result<(), MasterError> {
    let m = scenario.extrapolation_order();
    let has_feedthrough = scenario.subsystems.iter().any(|s| !s.feedthrough().is_empty());
    let estimator: Box<dyn ErrorEstimator> = match kind {
        EstimatorKind::Nepce {
            feedthrough_correction: false,
        } => Box::new(NepceEstimator::new(m)),
        EstimatorKind::Nepce {
            feedthrough_correction: true,
        } => {
            let ft = scenario.feedthrough_model();
            Box::new(
                NepceEstimator::with_feedthrough(m, &scenario.graph, &ft)
                    .map_err(|e| MasterError::Config(e.to_string()))?,
            )
        }
        EstimatorKind::Predictor => Box::new(PredictorEstimator::new(m, has_feedthrough)),
        EstimatorKind::Ecco => Box::new(EccoEstimator::new(m)),
    };
    scenario.indicator = Some(IndicatorSetup {
        estimator,
        indicator: ErrorIndicator {
            tolerances,
            aggregation,
        },
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::master::run;

    #[test]
    fn initial_energy_and_inputs() {
        let s = Builtin::Oscillator(OscillatorParams::default()).scenario(
            0.0,
            0.0,
            Stepping::Fixed { dt: 0.05 },
        );
        let r = run(s).unwrap();
        let first = &r.records[0];
        assert_eq!(first.energy, Some(500.0));
        assert_eq!(first.y, vec![0.0, -1000.0]);
        assert_eq!(first.u, vec![-1000.0, 0.0]);
    }

    #[test]
    fn quarter_car_initial_state() {
        let s = Builtin::QuarterCar(QuarterCarSetup::default()).scenario(
            0.0,
            0.0,
            Stepping::Fixed { dt: 1e-3 },
        );
        let r = run(s).unwrap();
        assert_eq!(r.records[0].y, vec![0.0, -1500.0]);
        assert_eq!(r.records[0].energy, Some(75.0));
    }

    #[test]
    fn names() {
        assert_eq!(Builtin::Oscillator(OscillatorParams::damped()).name(), "mass_spring_damped");
        assert_eq!(Builtin::QuarterCar(QuarterCarSetup::default()).name(), "quarter_car");
    }

    #[test]
    fn estimator_orders() {
        let n = EstimatorKind::default();
        assert_eq!(n.order(0, true), 1);
        assert_eq!(EstimatorKind::Predictor.order(0, false), 2);
        assert_eq!(EstimatorKind::Predictor.order(0, true), 1);
        assert_eq!(EstimatorKind::Ecco.order(1, false), 3);
    }

    #[test]
    fn invalid_params_are_named() {
        let p = OscillatorParams {
            mass: -1.0,
            ..Default::default()
        };
        assert!(p.validate().unwrap_err().contains("mass"));
    }
}
