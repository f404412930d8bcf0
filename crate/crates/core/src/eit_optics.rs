//! Linear EIT response of a Thomas-Fermi condensate: susceptibility, group
//! index and delay, optical depth, transparency window and the positions of
//! the absorption maxima.
//!
//! All frequencies are angular (rad/s); lengths in metres.

use crate::constants::{RB87_D1_WAVELENGTH, SPEED_OF_LIGHT};
use crate::error::{domain, Result};
use crate::numerics::optimize::brent_maximize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    pub atom_number: f64,
    /// Thomas-Fermi radii (Rx, Ry, Rz); the probe propagates along z.
    pub tf_radii: [f64; 3],
    /// Total excited-state decay rate Γ (rad/s).
    pub gamma: f64,
    /// Γ_p/Γ, fraction of decays into the probe ground state.
    pub branching_ratio: f64,
    pub lambda_p: f64,
}

impl MediumParams {
    pub fn new(atom_number: f64, tf_radii: [f64; 3], gamma: f64, branching_ratio: f64, lambda_p: f64) -> Result<Self> {
        let m = Self { atom_number, tf_radii, gamma, branching_ratio, lambda_p };
        m.validate()?;
        Ok(m)
    }

    /// N = 1.2×10⁶ ⁸⁷Rb atoms, radii (7, 25, 25) µm, 1/Γ = 26 ns, Γ_p = Γ/12, D1 line.
    pub fn reference() -> Self {
        Self {
            atom_number: 1.2e6,
            tf_radii: [7e-6, 25e-6, 25e-6],
            gamma: 1.0 / 26e-9,
            branching_ratio: 1.0 / 12.0,
            lambda_p: RB87_D1_WAVELENGTH,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("atom number", self.atom_number),
            ("Rx", self.tf_radii[0]),
            ("Ry", self.tf_radii[1]),
            ("Rz", self.tf_radii[2]),
            ("gamma", self.gamma),
            ("branching ratio", self.branching_ratio),
            ("probe wavelength", self.lambda_p),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return domain(format!("{name} must be positive, got {v}"));
            }
        }
        if self.branching_ratio > 1.0 {
            return domain("branching ratio must not exceed 1");
        }
        Ok(())
    }

    /// Γ_p in rad/s.
    pub fn gamma_p(&self) -> f64 {
        self.branching_ratio * self.gamma
    }

    /// Resonant cross section 3λ²/2π.
    pub fn cross_section(&self) -> f64 {
        3.0 * self.lambda_p * self.lambda_p / (2.0 * PI)
    }

    pub fn probe_angular_frequency(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.lambda_p
    }

    /// Central density 15N/(8π Rx Ry Rz) of the Thomas-Fermi parabola.
    pub fn peak_density(&self) -> f64 {
        let [rx, ry, rz] = self.tf_radii;
        15.0 * self.atom_number / (8.0 * PI * rx * ry * rz)
    }

    pub fn density(&self, x: f64, y: f64, z: f64) -> f64 {
        let [rx, ry, rz] = self.tf_radii;
        let q = 1.0 - (x / rx).powi(2) - (y / ry).powi(2) - (z / rz).powi(2);
        self.peak_density() * q.max(0.0)
    }

    /// Light transit time 2Rz/c through the cloud.
    pub fn transit_time(&self) -> f64 {
        2.0 * self.tf_radii[2] / SPEED_OF_LIGHT
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlField {
    /// Rabi frequency Ω_c (rad/s).
    pub omega_c: f64,
    /// Single-photon detuning Δ_c (rad/s).
    pub delta_c: f64,
}

impl ControlField {
    pub fn new(omega_c: f64, delta_c: f64) -> Result<Self> {
        if !(omega_c > 0.0) || !omega_c.is_finite() || !delta_c.is_finite() {
            return domain(format!("control Rabi frequency must be positive, got {omega_c}"));
        }
        Ok(Self { omega_c, delta_c })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Susceptibility {
    pub re: f64,
    pub im: f64,
}

/// Group index `Γ_p ρ σ c / Ω_c²`.
pub fn group_index(omega_c: f64, density: f64, medium: &MediumParams) -> f64 {
    medium.gamma_p() * density * medium.cross_section() * SPEED_OF_LIGHT / (omega_c * omega_c)
}

/// `χ₀ = n_gr Ω_c² / (ω_p Γ)`; independent of Ω_c once `n_gr` is expanded.
pub fn chi0(omega_c: f64, medium: &MediumParams, density: f64) -> f64 {
    group_index(omega_c, density, medium) * omega_c * omega_c / (medium.probe_angular_frequency() * medium.gamma)
}

pub fn susceptibility(delta2: f64, field: &ControlField, chi0: f64, gamma: f64) -> Susceptibility {
    if delta2 == 0.0 {
        return Susceptibility { re: 0.0, im: 0.0 };
    }
    let num = 2.0 * delta2 * gamma;
    let a = field.omega_c * field.omega_c - 4.0 * delta2 * (field.delta_c + delta2);
    let b = 2.0 * delta2 * gamma;
    // num / (a − i b) = num (a + i b) / (a² + b²)
    let den = a * a + b * b;
    Susceptibility { re: chi0 * num * a / den, im: chi0 * num * b / den }
}

/// Lowest-order expansion in δ₂; does not depend on Δ_c.
pub fn susceptibility_approx(delta2: f64, omega_c: f64, chi0: f64, gamma: f64) -> Susceptibility {
    let x = 2.0 * gamma * delta2 / (omega_c * omega_c);
    Susceptibility { re: chi0 * x, im: chi0 * x * x }
}

pub fn group_velocity(n_gr: f64) -> f64 {
    SPEED_OF_LIGHT / (1.0 + n_gr)
}

/// Optical depth along z at transverse position (x, y): the Thomas-Fermi
/// line integral `(Γ_p/Γ) σ (4/3) ρ₀ Rz (1 − x²/Rx² − y²/Ry²)^{3/2}`.
pub fn optical_depth(medium: &MediumParams, x: f64, y: f64) -> f64 {
    DepthProfile::from_medium(medium).depth(x, y)
}

/// Transverse optical-depth profile `d(x,y) = d_peak (1 − ρ̃²)^{3/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthProfile {
    pub peak: f64,
    pub rx: f64,
    pub ry: f64,
}

impl DepthProfile {
    pub fn from_medium(medium: &MediumParams) -> Self {
        let [rx, ry, rz] = medium.tf_radii;
        let peak = medium.branching_ratio * medium.cross_section() * (4.0 / 3.0) * medium.peak_density() * rz;
        Self { peak, rx, ry }
    }

    /// Same shape with the peak depth pinned to `peak`.
    pub fn with_peak(self, peak: f64) -> Self {
        Self { peak, ..self }
    }

    pub fn depth_at_scaled_radius(&self, rho: f64) -> f64 {
        let q = 1.0 - rho * rho;
        if q <= 0.0 {
            0.0
        } else {
            self.peak * q * q.sqrt()
        }
    }

    pub fn depth(&self, x: f64, y: f64) -> f64 {
        let q = 1.0 - (x / self.rx).powi(2) - (y / self.ry).powi(2);
        if q <= 0.0 {
            0.0
        } else {
            self.peak * q * q.sqrt()
        }
    }
}

/// `τ_d = Γ d_p / Ω_c²`.
pub fn pulse_delay(omega_c: f64, d_p: f64, gamma: f64) -> f64 {
    gamma * d_p / (omega_c * omega_c)
}

/// `Δω_trans = Ω_c² / (Γ √d_p)`.
pub fn transparency_width(omega_c: f64, gamma: f64, d_p: f64) -> Result<f64> {
    if !(d_p > 0.0) {
        return domain(format!("transparency width needs a positive optical depth, got {d_p}"));
    }
    Ok(omega_c * omega_c / (gamma * d_p.sqrt()))
}

/// rms width of the Gaussian intensity transmission window.
pub fn transmission_rms_width(omega_c: f64, gamma: f64, d_p: f64) -> Result<f64> {
    Ok(transparency_width(omega_c, gamma, d_p)? / 8f64.sqrt())
}

/// Two-photon detunings of the Im χ maxima, `(lower, upper)`: the roots of
/// `δ² + Δ_c δ − Ω_c²/4 = 0`.
pub fn im_chi_maxima(field: &ControlField) -> (f64, f64) {
    let d = field.delta_c;
    let sign = if d >= 0.0 { 1.0 } else { -1.0 };
    let q = -0.5 * (d + sign * d.hypot(field.omega_c));
    let r1 = q;
    let r2 = -0.25 * field.omega_c * field.omega_c / q;
    (r1.min(r2), r1.max(r2))
}

/// Locate the Im χ maximum inside `[lo, hi]` numerically.
pub fn locate_im_chi_maximum(field: &ControlField, chi0: f64, gamma: f64, lo: f64, hi: f64) -> f64 {
    let (x, _) = brent_maximize(|d| susceptibility(d, field, chi0, gamma).im, lo, hi, 1e-12, 500);
    x
}

/// `4|Δ_c| / (Γ √d_p)`: ≳ 1 means the useful storage bandwidth is set by the
/// nearest absorption maximum rather than the transparency window.
pub fn detuning_regime(delta_c: f64, gamma: f64, d_p: f64) -> f64 {
    4.0 * delta_c.abs() / (gamma * d_p.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressionDiagnostic {
    pub delay_ratio: f64,
    pub sqrt_depth: f64,
    /// τ_d/τ_p > 1: the pulse fits into the medium.
    pub compressible: bool,
    /// τ_d/τ_p < √d_p: absorption stays small.
    pub low_absorption: bool,
}

pub fn check_compression_condition(tau_d: f64, tau_p: f64, d_p: f64) -> CompressionDiagnostic {
    let delay_ratio = tau_d / tau_p;
    let sqrt_depth = d_p.max(0.0).sqrt();
    CompressionDiagnostic {
        delay_ratio,
        sqrt_depth,
        compressible: delay_ratio > 1.0,
        low_absorption: delay_ratio < sqrt_depth,
    }
}
