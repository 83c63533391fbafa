//! Energy residuals over power bonds.
//!
//! The residual power is the rate at which the coupling itself adds energy to
//! the system at a synchronization point; integrating it over the macro step
//! gives the residual energy.

use crate::signals::PowerBond;

/// Residual power and energy of one bond at one synchronization point.
#[derive(Debug, Clone, PartialEq)]
pub struct BondResidual {
    pub label: String,
    pub t: f64,
    /// Residual power δP [W]; positive when energy is added.
    pub power: f64,
    /// Residual energy δE [J] accrued over the step ending at `t`.
    pub energy: f64,
}

/// `δP = -Σ_k σ_k y_k ũ_k` with `ũ` the input held during the step ending now.
pub fn ecco_residual_power(bond: &PowerBond, y: &[f64], u_held: &[f64]) -> f64 {
    -bond
        .ports
        .iter()
        .map(|p| p.orientation.value() * y[p.output] * u_held[p.input])
        .sum::<f64>()
}

/// `δE = δP Δt / (m + 2)` for input extrapolation order `m`.
pub fn ecco_residual_energy(power: f64, dt: f64, extrapolation_order: usize) -> f64 {
    power * dt / (extrapolation_order as f64 + 2.0)
}

/// Energy residuals are additive across bonds.
pub fn ecco_total_residual(residuals: &[BondResidual]) -> f64 {
    residuals.iter().map(|r| r.energy).sum()
}

/// Mean absolute power carried by the bond's ports, used as the scale the
/// residual is measured against.
pub fn bond_transmitted_power(bond: &PowerBond, y: &[f64], u_held: &[f64]) -> f64 {
    if bond.ports.is_empty() {
        return 0.0;
    }
    bond.ports
        .iter()
        .map(|p| (y[p.output] * u_held[p.input]).abs())
        .sum::<f64>()
        / bond.ports.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{BondPort, Sign};

    /// Mass port (v out, F in) and spring port (F out, v in).
    fn force_velocity_bond() -> PowerBond {
        PowerBond::new(
            "mass-spring",
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
        )
    }

    #[test]
    fn exact_coupling_has_no_residual() {
        let (v, f) = (-0.37, 812.0);
        // inputs equal the connected outputs at the same instant
        assert_eq!(ecco_residual_power(&force_velocity_bond(), &[v, f], &[f, v]), 0.0);
    }

    #[test]
    fn zero_outputs_have_no_residual() {
        assert_eq!(ecco_residual_power(&force_velocity_bond(), &[0.0, 0.0], &[3.0, 4.0]), 0.0);
    }

    #[test]
    fn residual_power_from_raw_signals() {
        // δP = F_held v - F v_held
        let (v, f, f_held, v_held) = (-0.5, -1000.0 + 25.0, -1000.0, 0.0);
        let p = ecco_residual_power(&force_velocity_bond(), &[v, f], &[f_held, v_held]);
        assert_eq!(p, f_held * v - f * v_held);
        assert_eq!(p, 500.0);
    }

    #[test]
    fn residual_energy_arithmetic() {
        assert_eq!(ecco_residual_energy(0.0, 0.05, 0), 0.0);
        assert!((ecco_residual_energy(10.0, 0.05, 0) - 0.25).abs() < 1e-15);
        assert!((ecco_residual_energy(12.0, 0.1, 1) - 0.4).abs() < 1e-15);
    }

    fn residual(energy: f64) -> BondResidual {
        BondResidual {
            label: String::new(),
            t: 0.0,
            power: 0.0,
            energy,
        }
    }

    #[test]
    fn totals() {
        assert_eq!(ecco_total_residual(&[]), 0.0);
        let total = ecco_total_residual(&[residual(0.25), residual(-0.1)]);
        assert!((total - 0.15).abs() < 1e-15);
    }
}
