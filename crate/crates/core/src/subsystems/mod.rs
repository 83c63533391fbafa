//! Builtin benchmark subsystems and their monolithic references.

pub mod monolithic;
pub mod oscillator;
pub mod quarter_car;

pub use monolithic::{
    run_monolithic, MonolithicError, MonolithicModel, MonolithicOscillator, MonolithicQuarterCar,
    MonolithicSeries,
};
pub use oscillator::{MassSubsystem, SpringDamperSubsystem};
pub use quarter_car::{
    ChassisSubsystem, QuarterCarParams, QuarterCarState, SuspensionWheelSubsystem,
};

use crate::signals::Variable;
use crate::subsystem::{check_inputs, check_step, Subsystem, SubsystemError};

/// Outputs the input it received, unchanged. Useful for observing the data
/// flow of a master algorithm.
#[derive(Debug, Clone)]
pub struct Echo {
    name: String,
    value: f64,
    inputs: [Variable; 1],
    outputs: [Variable; 1],
}

impl Echo {
    pub fn new(name: &str, initial: f64) -> Self {
        Self {
            name: name.to_owned(),
            value: initial,
            inputs: [Variable::new(format!("{name}.in"), "1")],
            outputs: [Variable::new(format!("{name}.out"), "1")],
        }
    }
}

impl Subsystem for Echo {
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
        self.value = values[0];
        Ok(())
    }

    fn do_step(&mut self, h: f64) -> Result<(), SubsystemError> {
        check_step(h)
    }

    fn get_outputs(&self, out: &mut [f64]) {
        out[0] = self.value;
    }
}

/// Outputs elapsed time `t` plus an offset; ignores its input.
#[derive(Debug, Clone)]
pub struct Clock {
    name: String,
    t: f64,
    inputs: [Variable; 1],
    outputs: [Variable; 1],
}

impl Clock {
    pub fn new(name: &str, t0: f64) -> Self {
        Self {
            name: name.to_owned(),
            t: t0,
            inputs: [Variable::new(format!("{name}.in"), "1")],
            outputs: [Variable::new(format!("{name}.t"), "s")],
        }
    }
}

impl Subsystem for Clock {
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
        check_inputs(1, values)
    }

    fn do_step(&mut self, h: f64) -> Result<(), SubsystemError> {
        check_step(h)?;
        self.t += h;
        Ok(())
    }

    fn get_outputs(&self, out: &mut [f64]) {
        out[0] = self.t;
    }
}
