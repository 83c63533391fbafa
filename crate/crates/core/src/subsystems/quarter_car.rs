//! Quarter car split at the suspension: chassis (S1) and suspension plus
//! wheel (S2), coupled through the suspension force and chassis velocity.
//!
//! Displacements are measured from static equilibrium, so gravity does not
//! appear.

use crate::signals::Variable;
use crate::subsystem::{
    check_inputs, check_state, check_step, micro_steps, Feedthrough, Subsystem, SubsystemError,
};

/// Physical parameters of the quarter car.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuarterCarParams {
    /// Chassis mass `m_c` [kg].
    pub chassis_mass: f64,
    /// Wheel mass `m_w` [kg].
    pub wheel_mass: f64,
    /// Suspension stiffness `k_c` [N/m].
    pub suspension_stiffness: f64,
    /// Suspension damping `d_c` [N s/m].
    pub suspension_damping: f64,
    /// Tyre stiffness `k_w` [N/m].
    pub tyre_stiffness: f64,
}

impl Default for QuarterCarParams {
    fn default() -> Self {
        Self {
            chassis_mass: 400.0,
            wheel_mass: 40.0,
            suspension_stiffness: 1.5e4,
            suspension_damping: 1e3,
            tyre_stiffness: 1.5e5,
        }
    }
}

/// Initial displacements and velocities of both masses.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuarterCarState {
    pub chassis_position: f64,
    pub chassis_velocity: f64,
    pub wheel_position: f64,
    pub wheel_velocity: f64,
}

impl Default for QuarterCarState {
    fn default() -> Self {
        Self {
            chassis_position: 0.1,
            chassis_velocity: 0.0,
            wheel_position: 0.0,
            wheel_velocity: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChassisSubsystem {
    name: String,
    mass: f64,
    velocity: f64,
    position: f64,
    micro_dt: f64,
    force_in: f64,
    inputs: [Variable; 1],
    outputs: [Variable; 1],
}

impl ChassisSubsystem {
    pub fn new(name: &str, mass: f64, position: f64, velocity: f64, micro_dt: f64) -> Self {
        assert!(mass > 0.0 && micro_dt > 0.0);
        Self {
            name: name.to_owned(),
            mass,
            velocity,
            position,
            micro_dt,
            force_in: 0.0,
            inputs: [Variable::new(format!("{name}.F"), "N")],
            outputs: [Variable::new(format!("{name}.v"), "m/s")],
        }
    }

    pub fn velocity(&self) -> f64 {
        self.velocity
    }

    pub fn position(&self) -> f64 {
        self.position
    }
}

impl Subsystem for ChassisSubsystem {
    fn name(&self) -> &str {
        &self.name
    }

    fn inputs(&self) -> &[Variable] {
        &self.inputs
    }

    fn outputs(&self) -> &[Variable] {
        &self.outputs
    }

    fn set_inputs(&mut self, values: &[f64]) -> Result<(), SubsystemError> {
        check_inputs(1, values)?;
        self.force_in = values[0];
        Ok(())
    }

    fn do_step(&mut self, h: f64) -> Result<(), SubsystemError> {
        check_step(h)?;
        let accel = self.force_in / self.mass;
        for dt in micro_steps(h, self.micro_dt) {
            let v = self.velocity;
            self.velocity += accel * dt;
            self.position += v * dt;
        }
        check_state(
            &self.name,
            &[("velocity", self.velocity), ("position", self.position)],
        )
    }

    fn get_outputs(&self, out: &mut [f64]) {
        out[0] = self.velocity;
    }

    fn energy(&self) -> Option<f64> {
        Some(0.5 * self.mass * self.velocity * self.velocity)
    }
}

/// Suspension and wheel. Integrates the received chassis velocity into its
/// own copy of the chassis position and outputs the suspension force acting
/// on the chassis.
#[derive(Debug, Clone)]
pub struct SuspensionWheelSubsystem {
    name: String,
    params: QuarterCarParams,
    chassis_position: f64,
    wheel_position: f64,
    wheel_velocity: f64,
    micro_dt: f64,
    velocity_in: f64,
    inputs: [Variable; 1],
    outputs: [Variable; 1],
}

impl SuspensionWheelSubsystem {
    pub fn new(
        name: &str,
        params: QuarterCarParams,
        chassis_position: f64,
        wheel_position: f64,
        wheel_velocity: f64,
        micro_dt: f64,
    ) -> Self {
        assert!(micro_dt > 0.0);
        Self {
            name: name.to_owned(),
            params,
            chassis_position,
            wheel_position,
            wheel_velocity,
            micro_dt,
            velocity_in: 0.0,
            inputs: [Variable::new(format!("{name}.v"), "m/s")],
            outputs: [Variable::new(format!("{name}.F"), "N")],
        }
    }

    pub fn chassis_position(&self) -> f64 {
        self.chassis_position
    }

    pub fn wheel_position(&self) -> f64 {
        self.wheel_position
    }

    fn suspension_force(&self) -> f64 {
        let p = &self.params;
        p.suspension_stiffness * (self.wheel_position - self.chassis_position)
            + p.suspension_damping * (self.wheel_velocity - self.velocity_in)
    }
}

impl Subsystem for SuspensionWheelSubsystem {
    fn name(&self) -> &str {
        &self.name
    }

    fn inputs(&self) -> &[Variable] {
        &self.inputs
    }

    fn outputs(&self) -> &[Variable] {
        &self.outputs
    }

    fn set_inputs(&mut self, values: &[f64]) -> Result<(), SubsystemError> {
        check_inputs(1, values)?;
        self.velocity_in = values[0];
        Ok(())
    }

    fn do_step(&mut self, h: f64) -> Result<(), SubsystemError> {
        check_step(h)?;
        let p = self.params;
        for dt in micro_steps(h, self.micro_dt) {
            // all rates from the state at the start of the micro step
            let force = self.suspension_force();
            let accel = (-force - p.tyre_stiffness * self.wheel_position) / p.wheel_mass;
            let v = self.wheel_velocity;
            self.chassis_position += self.velocity_in * dt;
            self.wheel_velocity += accel * dt;
            self.wheel_position += v * dt;
        }
        check_state(
            &self.name,
            &[
                ("chassis position", self.chassis_position),
                ("wheel position", self.wheel_position),
                ("wheel velocity", self.wheel_velocity),
            ],
        )
    }

    fn get_outputs(&self, out: &mut [f64]) {
        out[0] = self.suspension_force();
    }

    fn feedthrough(&self) -> Vec<Feedthrough> {
        vec![Feedthrough {
            output: 0,
            input: 0,
            derivative: Some(-self.params.suspension_damping),
        }]
    }

    fn energy(&self) -> Option<f64> {
        let p = &self.params;
        let stretch = self.wheel_position - self.chassis_position;
        Some(
            0.5 * p.suspension_stiffness * stretch * stretch
                + 0.5 * p.wheel_mass * self.wheel_velocity * self.wheel_velocity
                + 0.5 * p.tyre_stiffness * self.wheel_position * self.wheel_position,
        )
    }
}
