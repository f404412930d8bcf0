//! Stokes and Poincaré descriptions of probe polarization, projective
//! two-port measurements and state fidelity.
//!
//! Conventions: S1 = I_H − I_V, S2 = I_D − I_A, S3 = I_R − I_L, with R ↔ σ⁺.

use crate::error::{domain, Error, Result};

/// Relative slack allowed on the degree of polarization before a vector is rejected.
pub const DOP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesVector {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesVector {
    /// Validated constructor. Polarized intensity exceeding `s0` by up to
    /// [`DOP_TOLERANCE`] (relative, on the squares) is clamped back onto the sphere.
    pub fn new(s0: f64, s1: f64, s2: f64, s3: f64) -> Result<Self> {
        if !(s0 >= 0.0) || ![s1, s2, s3].iter().all(|v| v.is_finite()) || !s0.is_finite() {
            return domain(format!("invalid Stokes vector ({s0}, {s1}, {s2}, {s3})"));
        }
        let p2 = s1 * s1 + s2 * s2 + s3 * s3;
        let s02 = s0 * s0;
        if p2 <= s02 {
            return Ok(Self { s0, s1, s2, s3 });
        }
        if p2 <= s02 * (1.0 + DOP_TOLERANCE) {
            let k = s0 / p2.sqrt();
            return Ok(Self { s0, s1: s1 * k, s2: s2 * k, s3: s3 * k });
        }
        Err(Error::Unphysical(format!(
            "degree of polarization {} exceeds 1",
            p2.sqrt() / s0
        )))
    }

    pub fn from_array(s: [f64; 4]) -> Result<Self> {
        Self::new(s[0], s[1], s[2], s[3])
    }

    /// Pure state of unit intensity on the given Poincaré direction.
    pub fn pure(u: PoincareVector) -> Self {
        Self { s0: 1.0, s1: u.u1, s2: u.u2, s3: u.u3 }
    }

    pub fn unpolarized(intensity: f64) -> Result<Self> {
        Self::new(intensity, 0.0, 0.0, 0.0)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.s0, self.s1, self.s2, self.s3]
    }

    pub fn polarized_intensity(&self) -> f64 {
        (self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3).sqrt()
    }

    pub fn degree_of_polarization(&self) -> f64 {
        if self.s0 == 0.0 {
            0.0
        } else {
            self.polarized_intensity() / self.s0
        }
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(k * self.s0, k * self.s1, k * self.s2, k * self.s3)
    }

    pub fn poincare(&self) -> Result<PoincareVector> {
        poincare(self)
    }

    pub const H: Self = Self { s0: 1.0, s1: 1.0, s2: 0.0, s3: 0.0 };
    pub const V: Self = Self { s0: 1.0, s1: -1.0, s2: 0.0, s3: 0.0 };
    pub const D: Self = Self { s0: 1.0, s1: 0.0, s2: 1.0, s3: 0.0 };
    pub const A: Self = Self { s0: 1.0, s1: 0.0, s2: -1.0, s3: 0.0 };
    pub const R: Self = Self { s0: 1.0, s1: 0.0, s2: 0.0, s3: 1.0 };
    pub const L: Self = Self { s0: 1.0, s1: 0.0, s2: 0.0, s3: -1.0 };
}

/// Normalized polarization direction `(S1, S2, S3)/S0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareVector {
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
}

impl PoincareVector {
    pub fn new(u1: f64, u2: f64, u3: f64) -> Result<Self> {
        let u = Self { u1, u2, u3 };
        let n = u.norm();
        if !n.is_finite() || n > 1.0 + DOP_TOLERANCE {
            return domain(format!("Poincaré vector norm {n} exceeds 1"));
        }
        Ok(u)
    }

    /// Unit vector along the given direction.
    pub fn unit(u1: f64, u2: f64, u3: f64) -> Result<Self> {
        let n = (u1 * u1 + u2 * u2 + u3 * u3).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return domain("cannot normalize a zero direction");
        }
        Ok(Self { u1: u1 / n, u2: u2 / n, u3: u3 / n })
    }

    pub fn norm(&self) -> f64 {
        (self.u1 * self.u1 + self.u2 * self.u2 + self.u3 * self.u3).sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.u1 * other.u1 + self.u2 * other.u2 + self.u3 * other.u3
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.u1, self.u2, self.u3]
    }

    pub const H: Self = Self { u1: 1.0, u2: 0.0, u3: 0.0 };
    pub const D: Self = Self { u1: 0.0, u2: 1.0, u3: 0.0 };
    pub const R: Self = Self { u1: 0.0, u2: 0.0, u3: 1.0 };
}

/// Wave-plate + PBS setting; the "+" port transmits the state along `axis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementBasis {
    axis: PoincareVector,
}

impl MeasurementBasis {
    pub fn new(axis: PoincareVector) -> Result<Self> {
        if (axis.norm() - 1.0).abs() > 1e-9 {
            return domain(format!("measurement axis must be a unit vector, |axis| = {}", axis.norm()));
        }
        Ok(Self { axis })
    }

    pub fn axis(&self) -> PoincareVector {
        self.axis
    }

    pub const HV: Self = Self { axis: PoincareVector::H };
    pub const DA: Self = Self { axis: PoincareVector::D };
    pub const RL: Self = Self { axis: PoincareVector::R };
}

/// Raw Stokes components from six polarizer intensities, without the
/// degree-of-polarization check. S0 is the mean of the three basis sums.
pub fn stokes_components(i_h: f64, i_v: f64, i_d: f64, i_a: f64, i_r: f64, i_l: f64) -> Result<[f64; 4]> {
    for (name, v) in [("I_H", i_h), ("I_V", i_v), ("I_D", i_d), ("I_A", i_a), ("I_R", i_r), ("I_L", i_l)] {
        if !(v >= 0.0) || !v.is_finite() {
            return domain(format!("intensity {name} must be non-negative, got {v}"));
        }
    }
    let s0 = ((i_h + i_v) + (i_d + i_a) + (i_r + i_l)) / 3.0;
    Ok([s0, i_h - i_v, i_d - i_a, i_r - i_l])
}

pub fn stokes_from_intensities(i_h: f64, i_v: f64, i_d: f64, i_a: f64, i_r: f64, i_l: f64) -> Result<StokesVector> {
    StokesVector::from_array(stokes_components(i_h, i_v, i_d, i_a, i_r, i_l)?)
}

pub fn poincare(s: &StokesVector) -> Result<PoincareVector> {
    if !(s.s0 > 0.0) {
        return domain("S0 = 0: polarization undefined");
    }
    Ok(PoincareVector { u1: s.s1 / s.s0, u2: s.s2 / s.s0, u3: s.s3 / s.s0 })
}

/// State fidelity `(1 + u_in·u_out)/2` for a pure input state.
pub fn fidelity(u_in: &PoincareVector, u_out: &PoincareVector) -> Result<f64> {
    if (u_in.norm() - 1.0).abs() > 1e-6 {
        return domain(format!("input state must be pure, |u_in| = {}", u_in.norm()));
    }
    Ok(((1.0 + u_in.dot(u_out)) / 2.0).clamp(0.0, 1.0))
}

/// Intensities at the two PBS ports for the given basis.
pub fn measure(s: &StokesVector, basis: &MeasurementBasis) -> (f64, f64) {
    let a = basis.axis;
    let proj = a.u1 * s.s1 + a.u2 * s.s2 + a.u3 * s.s3;
    let plus = 0.5 * (s.s0 + proj);
    // computed as the complement so that plus + minus reproduces s0
    (plus, s.s0 - plus)
}
