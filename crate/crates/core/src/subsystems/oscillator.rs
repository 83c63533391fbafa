//! Mass and spring–damper halves of the 1-D harmonic oscillator.
//!
//! The mass outputs its velocity and takes the spring force as input; the
//! spring–damper integrates the received velocity and outputs the force it
//! exerts on the mass, `F = -k x - d v`.

use crate::signals::Variable;
use crate::subsystem::{
    check_inputs, check_state, check_step, micro_steps, Feedthrough, Subsystem, SubsystemError,
};

#[derive(Debug, Clone)]
pub struct MassSubsystem {
    name: String,
    mass: f64,
    velocity: f64,
    position: f64,
    micro_dt: f64,
    force_in: f64,
    inputs: [Variable; 1],
    outputs: [Variable; 1],
}

impl MassSubsystem {
    pub fn new(name: &str, mass: f64, position: f64, velocity: f64, micro_dt: f64) -> Self {
        assert!(mass > 0.0, "mass must be positive");
        assert!(micro_dt > 0.0, "micro step must be positive");
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

impl Subsystem for MassSubsystem {
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

#[derive(Debug, Clone)]
pub struct SpringDamperSubsystem {
    name: String,
    stiffness: f64,
    damping: f64,
    elongation: f64,
    micro_dt: f64,
    velocity_in: f64,
    inputs: [Variable; 1],
    outputs: [Variable; 1],
}

impl SpringDamperSubsystem {
    pub fn new(name: &str, stiffness: f64, damping: f64, elongation: f64, micro_dt: f64) -> Self {
        assert!(stiffness > 0.0, "stiffness must be positive");
        assert!(damping >= 0.0, "damping must be non-negative");
        assert!(micro_dt > 0.0, "micro step must be positive");
        Self {
            name: name.to_owned(),
            stiffness,
            damping,
            elongation,
            micro_dt,
            velocity_in: 0.0,
            inputs: [Variable::new(format!("{name}.v"), "m/s")],
            outputs: [Variable::new(format!("{name}.F"), "N")],
        }
    }

    pub fn elongation(&self) -> f64 {
        self.elongation
    }

    fn force(&self) -> f64 {
        -self.stiffness * self.elongation - self.damping * self.velocity_in
    }
}

impl Subsystem for SpringDamperSubsystem {
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
        for dt in micro_steps(h, self.micro_dt) {
            self.elongation += self.velocity_in * dt;
        }
        check_state(&self.name, &[("elongation", self.elongation)])
    }

    fn get_outputs(&self, out: &mut [f64]) {
        out[0] = self.force();
    }

    fn feedthrough(&self) -> Vec<Feedthrough> {
        if self.damping == 0.0 {
            return Vec::new();
        }
        vec![Feedthrough {
            output: 0,
            input: 0,
            derivative: Some(-self.damping),
        }]
    }

    fn energy(&self) -> Option<f64> {
        Some(0.5 * self.stiffness * self.elongation * self.elongation)
    }
}
