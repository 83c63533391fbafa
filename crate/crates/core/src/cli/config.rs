//! JSON run configuration. Every field except `schema_version` and
//! `scenario` is optional; [`RunConfig::resolve`] fills gaps with the
//! builtin's defaults and the result is what gets echoed next to the output.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::controller::ControllerConfig;
use crate::indicator::{scaled_tolerances, AggregationKind, ToleranceSet};
use crate::master::{MasterError, Scenario, Stepping};
use crate::scenarios::{attach_indicator, Builtin, EstimatorKind, OscillatorParams, QuarterCarSetup};
use crate::subsystems::{QuarterCarParams, QuarterCarState};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub scenario: ScenarioConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    /// Macro step for fixed mode [s].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<ControllerSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indicator: Option<IndicatorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallel: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Reserved; the builtin scenarios are deterministic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Fixed,
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builtin", rename_all = "snake_case")]
pub enum ScenarioConfig {
    MassSpring(OscillatorOverrides),
    MassSpringDamped(OscillatorOverrides),
    QuarterCar(QuarterCarOverrides),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stiffness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub micro_dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuarterCarOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chassis_mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wheel_mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suspension_stiffness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suspension_damping: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tyre_stiffness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chassis_position: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chassis_velocity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wheel_position: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wheel_velocity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub micro_dt: Option<f64>,
}

/// Controller overrides; gains default to `0.4/p` and `0.3/p`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_i: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safety: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_start: Option<f64>,
}

/// Either `relative_tolerance` with `typical` magnitudes, or explicit
/// per-signal `absolute` and `relative` tolerances.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub typical: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub absolute: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregation: Option<AggregationKind>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Default configuration for a builtin scenario.
    pub fn builtin(name: &str) -> Result<Self, ConfigError> {
        let scenario = match name {
            "mass_spring" => ScenarioConfig::MassSpring(Default::default()),
            "mass_spring_damped" => ScenarioConfig::MassSpringDamped(Default::default()),
            "quarter_car" => ScenarioConfig::QuarterCar(Default::default()),
            other => return err(format!("unknown builtin scenario '{other}'")),
        };
        Self {
            schema_version: SCHEMA_VERSION,
            scenario,
            t_start: None,
            t_stop: None,
            mode: None,
            dt: None,
            controller: None,
            estimator: None,
            indicator: None,
            parallel: None,
            output: None,
            seed: None,
        }
        .resolve()
    }

    pub fn builtin_system(&self) -> Builtin {
        match &self.scenario {
            ScenarioConfig::MassSpring(o) => Builtin::Oscillator(o.apply(OscillatorParams::default())),
            ScenarioConfig::MassSpringDamped(o) => {
                Builtin::Oscillator(o.apply(OscillatorParams::damped()))
            }
            ScenarioConfig::QuarterCar(o) => Builtin::QuarterCar(o.apply(QuarterCarSetup::default())),
        }
    }

    /// Typical signal magnitudes used for tolerance scaling, in the
    /// estimator's error order.
    fn default_typical(&self, estimator: EstimatorKind) -> Vec<f64> {
        // (force [N], velocity [m/s])
        let (force, velocity) = match self.scenario {
            ScenarioConfig::QuarterCar(_) => (1e3, 0.3),
            _ => (1e3, 3.0),
        };
        match estimator {
            // inputs are (F, v)
            EstimatorKind::Nepce { .. } => vec![force, velocity],
            // outputs are (v, F)
            EstimatorKind::Predictor => vec![velocity, force],
            // one bond; energy over a 10 ms step at typical power
            EstimatorKind::Ecco => vec![force * velocity * 1e-2],
        }
    }

    /// Fill every optional field and check the result.
    pub fn resolve(&self) -> Result<Self, ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return err(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            ));
        }
        let system = self.builtin_system();
        system
            .validate()
            .map_err(|e| ConfigError(format!("scenario: {e}")))?;
        let quarter_car = matches!(self.scenario, ScenarioConfig::QuarterCar(_));

        let t_start = self.t_start.unwrap_or(0.0);
        let t_stop = self.t_stop.unwrap_or(if quarter_car { 4.0 } else { 5.0 });
        if !t_start.is_finite() {
            return err("t_start must be finite");
        }
        if !t_stop.is_finite() || t_stop < t_start {
            return err(format!("t_stop ({t_stop}) must not precede t_start ({t_start})"));
        }
        let mode = self
            .mode
            .unwrap_or(if quarter_car { Mode::Adaptive } else { Mode::Fixed });
        let dt = match self.dt {
            Some(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return err(format!("dt must be positive, got {dt}"));
            }
            Some(dt) => dt,
            None if matches!(self.scenario, ScenarioConfig::MassSpringDamped(_)) => 1e-3,
            None => 1e-2,
        };

        let estimator = self.estimator.unwrap_or_default();
        let has_feedthrough = match system {
            Builtin::Oscillator(p) => p.damping > 0.0,
            Builtin::QuarterCar(_) => true,
        };
        let p = estimator.order(0, has_feedthrough);
        let c = self.controller.unwrap_or_default();
        let base = ControllerConfig::for_order(p);
        let controller = ControllerConfig {
            k_p: c.k_p.unwrap_or(base.k_p),
            k_i: c.k_i.unwrap_or(base.k_i),
            dt_min: c.dt_min.unwrap_or(base.dt_min),
            dt_max: c.dt_max.unwrap_or(base.dt_max),
            theta_min: c.theta_min.unwrap_or(base.theta_min),
            theta_max: c.theta_max.unwrap_or(base.theta_max),
            safety: c.safety.unwrap_or(base.safety),
            dt_start: Some(c.dt_start.unwrap_or(c.dt_min.unwrap_or(base.dt_min))),
        };
        controller
            .validate()
            .map_err(|e| ConfigError(format!("controller: {e}")))?;

        let ind = self.indicator.clone().unwrap_or_default();
        let explicit = ind.absolute.is_some() || ind.relative.is_some();
        let scaled = ind.relative_tolerance.is_some() || ind.typical.is_some();
        if explicit && scaled {
            return err("indicator: give either relative_tolerance/typical or absolute/relative, not both");
        }
        let indicator = if explicit {
            let (Some(a), Some(r)) = (&ind.absolute, &ind.relative) else {
                return err("indicator: absolute and relative must be given together");
            };
            ToleranceSet::new(a.clone(), r.clone())
                .map_err(|e| ConfigError(format!("indicator: {e}")))?;
            IndicatorConfig {
                aggregation: Some(ind.aggregation.unwrap_or_default()),
                ..ind.clone()
            }
        } else {
            let sigma = ind.relative_tolerance.unwrap_or(2e-3);
            let typical = ind
                .typical
                .clone()
                .unwrap_or_else(|| self.default_typical(estimator));
            scaled_tolerances(sigma, &typical)
                .map_err(|e| ConfigError(format!("indicator: {e}")))?;
            IndicatorConfig {
                relative_tolerance: Some(sigma),
                typical: Some(typical),
                absolute: None,
                relative: None,
                aggregation: Some(ind.aggregation.unwrap_or_default()),
            }
        };

        let resolved = Self {
            schema_version: SCHEMA_VERSION,
            scenario: self.scenario.resolved(),
            t_start: Some(t_start),
            t_stop: Some(t_stop),
            mode: Some(mode),
            dt: Some(dt),
            controller: Some(ControllerSettings {
                k_p: Some(controller.k_p),
                k_i: Some(controller.k_i),
                dt_min: Some(controller.dt_min),
                dt_max: Some(controller.dt_max),
                theta_min: Some(controller.theta_min),
                theta_max: Some(controller.theta_max),
                safety: Some(controller.safety),
                dt_start: controller.dt_start,
            }),
            estimator: Some(estimator),
            indicator: Some(indicator),
            parallel: Some(self.parallel.unwrap_or(false)),
            output: self.output.clone(),
            seed: self.seed,
        };
        // catch mismatched tolerance counts and similar before anything runs
        resolved
            .scenario_with(resolved.stepping())
            .and_then(|s| s.validate().map(|_| ()))
            .map_err(|e| ConfigError(e.to_string()))?;
        Ok(resolved)
    }

    /// Stepping of a resolved config.
    pub fn stepping(&self) -> Stepping {
        match self.mode {
            Some(Mode::Adaptive) => Stepping::Adaptive(self.controller_config()),
            _ => Stepping::Fixed {
                dt: self.dt.unwrap_or(1e-2),
            },
        }
    }

    fn controller_config(&self) -> ControllerConfig {
        let c = self.controller.unwrap_or_default();
        let base = ControllerConfig::default();
        ControllerConfig {
            k_p: c.k_p.unwrap_or(base.k_p),
            k_i: c.k_i.unwrap_or(base.k_i),
            dt_min: c.dt_min.unwrap_or(base.dt_min),
            dt_max: c.dt_max.unwrap_or(base.dt_max),
            theta_min: c.theta_min.unwrap_or(base.theta_min),
            theta_max: c.theta_max.unwrap_or(base.theta_max),
            safety: c.safety.unwrap_or(base.safety),
            dt_start: c.dt_start,
        }
    }

    fn tolerances(&self) -> Result<(ToleranceSet, AggregationKind), MasterError> {
        let ind = self.indicator.clone().unwrap_or_default();
        let to_master = |e: crate::indicator::IndicatorError| MasterError::Config(e.to_string());
        let tol = match (&ind.absolute, &ind.relative) {
            (Some(a), Some(r)) => ToleranceSet::new(a.clone(), r.clone()).map_err(to_master)?,
            _ => {
                let estimator = self.estimator.unwrap_or_default();
                let typical = ind
                    .typical
                    .clone()
                    .unwrap_or_else(|| self.default_typical(estimator));
                scaled_tolerances(ind.relative_tolerance.unwrap_or(2e-3), &typical)
                    .map_err(to_master)?
            }
        };
        Ok((tol, ind.aggregation.unwrap_or_default()))
    }

    /// Build a runnable scenario from a resolved config with the given stepping.
    pub fn scenario_with(&self, stepping: Stepping) -> Result<Scenario, MasterError> {
        let mut s = self.builtin_system().scenario(
            self.t_start.unwrap_or(0.0),
            self.t_stop.unwrap_or(5.0),
            stepping,
        );
        s.parallel = self.parallel.unwrap_or(false);
        let (tol, agg) = self.tolerances()?;
        attach_indicator(&mut s, self.estimator.unwrap_or_default(), tol, agg)?;
        Ok(s)
    }
}

impl ScenarioConfig {
    /// The same scenario with every parameter spelled out.
    fn resolved(&self) -> Self {
        let osc = |p: OscillatorParams| OscillatorOverrides {
            mass: Some(p.mass),
            stiffness: Some(p.stiffness),
            damping: Some(p.damping),
            position: Some(p.position),
            velocity: Some(p.velocity),
            micro_dt: Some(p.micro_dt),
        };
        match self {
            ScenarioConfig::MassSpring(o) => {
                ScenarioConfig::MassSpring(osc(o.apply(OscillatorParams::default())))
            }
            ScenarioConfig::MassSpringDamped(o) => {
                ScenarioConfig::MassSpringDamped(osc(o.apply(OscillatorParams::damped())))
            }
            ScenarioConfig::QuarterCar(o) => {
                let q = o.apply(QuarterCarSetup::default());
                ScenarioConfig::QuarterCar(QuarterCarOverrides {
                    chassis_mass: Some(q.params.chassis_mass),
                    wheel_mass: Some(q.params.wheel_mass),
                    suspension_stiffness: Some(q.params.suspension_stiffness),
                    suspension_damping: Some(q.params.suspension_damping),
                    tyre_stiffness: Some(q.params.tyre_stiffness),
                    chassis_position: Some(q.initial.chassis_position),
                    chassis_velocity: Some(q.initial.chassis_velocity),
                    wheel_position: Some(q.initial.wheel_position),
                    wheel_velocity: Some(q.initial.wheel_velocity),
                    micro_dt: Some(q.micro_dt),
                })
            }
        }
    }
}

impl OscillatorOverrides {
    pub fn apply(&self, base: OscillatorParams) -> OscillatorParams {
        OscillatorParams {
            mass: self.mass.unwrap_or(base.mass),
            stiffness: self.stiffness.unwrap_or(base.stiffness),
            damping: self.damping.unwrap_or(base.damping),
            position: self.position.unwrap_or(base.position),
            velocity: self.velocity.unwrap_or(base.velocity),
            micro_dt: self.micro_dt.unwrap_or(base.micro_dt),
        }
    }
}

impl QuarterCarOverrides {
    pub fn apply(&self, base: QuarterCarSetup) -> QuarterCarSetup {
        let (p, s) = (base.params, base.initial);
        QuarterCarSetup {
            params: QuarterCarParams {
                chassis_mass: self.chassis_mass.unwrap_or(p.chassis_mass),
                wheel_mass: self.wheel_mass.unwrap_or(p.wheel_mass),
                suspension_stiffness: self.suspension_stiffness.unwrap_or(p.suspension_stiffness),
                suspension_damping: self.suspension_damping.unwrap_or(p.suspension_damping),
                tyre_stiffness: self.tyre_stiffness.unwrap_or(p.tyre_stiffness),
            },
            initial: QuarterCarState {
                chassis_position: self.chassis_position.unwrap_or(s.chassis_position),
                chassis_velocity: self.chassis_velocity.unwrap_or(s.chassis_velocity),
                wheel_position: self.wheel_position.unwrap_or(s.wheel_position),
                wheel_velocity: self.wheel_velocity.unwrap_or(s.wheel_velocity),
            },
            micro_dt: self.micro_dt.unwrap_or(base.micro_dt),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_resolves() {
        let c = RunConfig::from_json(r#"{"schema_version": 1, "scenario": {"builtin": "mass_spring"}}"#)
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(c.t_stop, Some(5.0));
        assert_eq!(c.mode, Some(Mode::Fixed));
        // the echo is itself a valid config that resolves to itself
        let echoed = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&echoed).unwrap().resolve().unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            r#"{"schema_version": 1, "scenario": {"builtin": "mass_spring"}, "colour": 1}"#,
            r#"{"schema_version": 1, "scenario": {"builtin": "mass_spring", "colour": 1}}"#,
            r#"{"schema_version": 1, "scenario": {"builtin": "quarter_car"}, "controller": {"kp": 1}}"#,
        ] {
            assert!(RunConfig::from_json(text).is_err(), "{text}");
        }
        assert!(RunConfig::from_json(r#"{"schema_version": 1, "scenario": {"builtin": "bicycle"}}"#).is_err());
    }

    #[test]
    fn reversed_span_names_field() {
        let c = RunConfig::from_json(
            r#"{"schema_version": 1, "scenario": {"builtin": "mass_spring"}, "t_start": 2, "t_stop": 1}"#,
        )
        .unwrap();
        assert!(c.resolve().unwrap_err().0.contains("t_stop"));
    }

    #[test]
    fn negative_parameter_names_field() {
        let c = RunConfig::from_json(
            r#"{"schema_version": 1, "scenario": {"builtin": "quarter_car", "wheel_mass": -4}}"#,
        )
        .unwrap();
        assert!(c.resolve().unwrap_err().0.contains("wheel_mass"));
    }

    #[test]
    fn wrong_schema_version() {
        let c = RunConfig::from_json(r#"{"schema_version": 9, "scenario": {"builtin": "mass_spring"}}"#)
            .unwrap();
        assert!(c.resolve().unwrap_err().0.contains("schema_version"));
    }

    #[test]
    fn quarter_car_defaults_match_reference_setup() {
        let c = RunConfig::builtin("quarter_car").unwrap();
        assert_eq!(c.mode, Some(Mode::Adaptive));
        let Stepping::Adaptive(ctrl) = c.stepping() else {
            panic!("expected adaptive stepping")
        };
        assert_eq!((ctrl.k_p, ctrl.k_i), (0.4, 0.3));
        assert_eq!((ctrl.dt_min, ctrl.dt_max), (1e-4, 1e-2));
        assert_eq!((ctrl.theta_min, ctrl.theta_max), (0.2, 1.5));
        assert_eq!(ctrl.start_step(), 1e-4);
        let ind = c.indicator.unwrap();
        assert_eq!(ind.relative_tolerance, Some(2e-3));
        assert_eq!(ind.typical, Some(vec![1e3, 0.3]));
        assert_eq!(ind.aggregation, Some(AggregationKind::Rmse));
    }

    #[test]
    fn tolerance_count_must_match_estimator() {
        let c = RunConfig::from_json(
            r#"{"schema_version": 1, "scenario": {"builtin": "quarter_car"},
                "indicator": {"relative_tolerance": 1e-3, "typical": [1, 2, 3]}}"#,
        )
        .unwrap();
        assert!(c.resolve().is_err());
    }
}
