//! Physical constants and the atomic parameters of the storage transition.

use crate::error::{domain, Result};
use std::f64::consts::PI;

/// Vacuum speed of light (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Atomic mass unit (kg).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Mass of ⁸⁷Rb (kg).
pub const RB87_MASS: f64 = 86.909_180_527 * ATOMIC_MASS_UNIT;
/// Wavelength of the Rb D1 line (m).
pub const RB87_D1_WAVELENGTH: f64 = 795e-9;

/// Constants entering the Zeeman, recoil and thermal estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomicConstants {
    /// Landé factor of the storage states.
    pub g_f: f64,
    /// Difference of magnetic quantum numbers between the two qubit states.
    pub delta_mf: f64,
    /// Bohr magneton expressed as a frequency per field, Hz/G.
    pub mu_b_over_h: f64,
    pub hbar: f64,
    /// Atomic mass (kg).
    pub mass: f64,
    pub k_b: f64,
    pub c: f64,
    /// Probe wavelength (m).
    pub lambda_p: f64,
}

impl AtomicConstants {
    /// ⁸⁷Rb D1 line, storage in |2,±1⟩ (g_F = 1/2, Δm_F = 2).
    pub fn rubidium87_d1() -> Self {
        Self {
            g_f: 0.5,
            delta_mf: 2.0,
            mu_b_over_h: 1.40e6,
            hbar: HBAR,
            mass: RB87_MASS,
            k_b: BOLTZMANN,
            c: SPEED_OF_LIGHT,
            lambda_p: RB87_D1_WAVELENGTH,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("g_f", self.g_f),
            ("delta_mf", self.delta_mf),
            ("mu_b_over_h", self.mu_b_over_h),
            ("hbar", self.hbar),
            ("mass", self.mass),
            ("k_b", self.k_b),
            ("c", self.c),
            ("lambda_p", self.lambda_p),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return domain(format!("atomic constant {name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    /// ∂ω_F/∂B_z in rad s⁻¹ G⁻¹.
    pub fn zeeman_slope(&self) -> f64 {
        2.0 * PI * self.mu_b_over_h * self.g_f * self.delta_mf
    }
}

impl Default for AtomicConstants {
    fn default() -> Self {
        Self::rubidium87_d1()
    }
}
