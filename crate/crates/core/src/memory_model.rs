//! The storage-and-retrieval process as a Müller matrix.
//!
//! A single shot is a pure Faraday rotation of the Poincaré vector about its
//! third axis, scaled by the efficiency. Shot-to-shot fluctuations of the
//! hold field smear the rotation angle; averaged over shots this shrinks the
//! equatorial block by `α = exp(−σ_φ²/2)`.

use crate::constants::AtomicConstants;
use crate::error::{domain, Error, Result};
use crate::polarization::{fidelity, PoincareVector, StokesVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuellerMatrix {
    pub m: [[f64; 4]; 4],
}

impl MuellerMatrix {
    pub fn new(m: [[f64; 4]; 4]) -> Self {
        Self { m }
    }

    pub fn identity() -> Self {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self { m }
    }

    /// `self · other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let mut out = [[0.0; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..4).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Self { m: out }
    }

    pub fn apply_raw(&self, s: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (o, row) in out.iter_mut().zip(&self.m) {
            *o = row.iter().zip(s).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// Matrix-vector product; an output outside the Stokes cone means the
    /// matrix is unphysical and is reported as [`Error::Unphysical`].
    pub fn apply(&self, s_in: &StokesVector) -> Result<StokesVector> {
        StokesVector::from_array(self.apply_raw(&s_in.as_array()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.m;
        for (row, orow) in out.iter_mut().zip(&other.m) {
            for (v, o) in row.iter_mut().zip(orow) {
                *v -= o;
            }
        }
        Self { m: out }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

pub fn apply(m: &MuellerMatrix, s_in: &StokesVector) -> Result<StokesVector> {
    m.apply(s_in)
}

/// Efficiency, equatorial damping and Faraday angle of the structured memory matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryParams {
    pub eta: f64,
    pub alpha: f64,
    pub phi: f64,
}

impl MemoryParams {
    pub fn new(eta: f64, alpha: f64, phi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return domain(format!("efficiency must lie in [0, 1], got {eta}"));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return domain(format!("damping factor must lie in [0, 1], got {alpha}"));
        }
        if !phi.is_finite() {
            return domain("Faraday angle must be finite");
        }
        Ok(Self { eta, alpha, phi })
    }
}

pub fn memory_mueller(p: &MemoryParams) -> MuellerMatrix {
    let (s, c) = p.phi.sin_cos();
    let e = p.eta;
    let ea = p.eta * p.alpha;
    MuellerMatrix::new([
        [e, 0.0, 0.0, 0.0],
        [0.0, ea * c, -ea * s, 0.0],
        [0.0, ea * s, ea * c, 0.0],
        [0.0, 0.0, 0.0, e],
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoisePreset {
    /// No reduction of the 50 Hz line noise.
    Unsynchronized,
    /// Write-read cycle triggered on the ac line phase.
    LineSynced,
    /// Open-loop feed-forward coil compensation.
    FeedForward,
    Custom,
}

impl NoisePreset {
    /// rms shot-to-shot field fluctuation in gauss; `None` for `Custom`.
    pub fn sigma_b_gauss(self) -> Option<f64> {
        match self {
            Self::Unsynchronized => Some(2e-3),
            Self::LineSynced => Some(0.1e-3),
            Self::FeedForward => Some(0.2e-3),
            Self::Custom => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Unsynchronized => "unsynchronized",
            Self::LineSynced => "line-synced",
            Self::FeedForward => "feed-forward",
            Self::Custom => "custom",
        }
    }

    pub const MEASURED: [NoisePreset; 3] = [Self::Unsynchronized, Self::LineSynced, Self::FeedForward];
}

impl fmt::Display for NoisePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoisePreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "unsynchronized" => Ok(Self::Unsynchronized),
            "line-synced" => Ok(Self::LineSynced),
            "feed-forward" => Ok(Self::FeedForward),
            "custom" => Ok(Self::Custom),
            other => Err(Error::Config(format!("unknown noise preset '{other}'"))),
        }
    }
}

/// Hold field and its shot-to-shot fluctuation (gauss). The field is constant
/// within a shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub mean_bz: f64,
    pub sigma_b: f64,
    pub preset: NoisePreset,
}

impl NoiseModel {
    pub fn new(mean_bz: f64, sigma_b: f64) -> Result<Self> {
        if !(sigma_b >= 0.0) || !sigma_b.is_finite() || !mean_bz.is_finite() {
            return domain(format!("field noise must be finite and non-negative, got {sigma_b}"));
        }
        Ok(Self { mean_bz, sigma_b, preset: NoisePreset::Custom })
    }

    pub fn from_preset(preset: NoisePreset, mean_bz: f64) -> Result<Self> {
        let sigma_b = preset
            .sigma_b_gauss()
            .ok_or_else(|| Error::Config("the custom preset needs an explicit sigma_b".into()))?;
        Ok(Self { mean_bz, sigma_b, preset })
    }

    pub fn noiseless(mean_bz: f64) -> Self {
        Self { mean_bz, sigma_b: 0.0, preset: NoisePreset::Custom }
    }
}

/// Faraday rotation rate of the Poincaré vector, rad/s, for a field in gauss.
pub fn faraday_frequency(bz: f64, consts: &AtomicConstants) -> f64 {
    consts.zeeman_slope() * bz
}

pub fn rotation_angle(t_store: f64, tau_d: f64, omega_f: f64) -> f64 {
    omega_f * (t_store + tau_d)
}

pub fn damping_factor(t_store: f64, sigma_alpha: f64) -> Result<f64> {
    if !(sigma_alpha > 0.0) {
        return domain(format!("damping time must be positive, got {sigma_alpha}"));
    }
    if t_store < 0.0 {
        return domain("storage time must be non-negative");
    }
    Ok((-t_store * t_store / (2.0 * sigma_alpha * sigma_alpha)).exp())
}

/// e^{-1/2} damping time (s) produced by field noise `sigma_b` (gauss).
/// Zero noise gives `+∞`.
pub fn sigma_alpha_from_noise(sigma_b: f64, consts: &AtomicConstants) -> Result<f64> {
    if !(sigma_b >= 0.0) {
        return domain(format!("field noise must be non-negative, got {sigma_b}"));
    }
    if sigma_b == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / (sigma_b * consts.zeeman_slope()))
}

/// Average process fidelity over the Poincaré sphere once the Faraday
/// rotation is compensated.
pub fn average_process_fidelity(alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return domain(format!("damping factor must lie in [0, 1], got {alpha}"));
    }
    Ok((2.0 + alpha) / 3.0)
}

/// Normalized S1 of a linearly polarized input after storage.
pub fn s1_trace(t_store: f64, sigma_alpha: f64, phi: f64, phi0: f64) -> f64 {
    let envelope = if sigma_alpha.is_infinite() {
        1.0
    } else {
        (-t_store * t_store / (2.0 * sigma_alpha * sigma_alpha)).exp()
    };
    envelope * (phi - phi0).cos()
}

/// Shot-averaged memory matrix: mean rotation `ω_F(B̄)(t+τ_d)` and
/// `α = exp(−σ_φ²/2)` with `σ_φ = ∂ω_F/∂B · σ_B · (t+τ_d)`.
pub fn ensemble_mueller(
    t_store: f64,
    tau_d: f64,
    eta: f64,
    noise: &NoiseModel,
    consts: &AtomicConstants,
) -> Result<MuellerMatrix> {
    let t = t_store + tau_d;
    let phi = faraday_frequency(noise.mean_bz, consts) * t;
    let sigma_phi = consts.zeeman_slope() * noise.sigma_b * t;
    let alpha = (-0.5 * sigma_phi * sigma_phi).exp();
    Ok(memory_mueller(&MemoryParams::new(eta, alpha, phi)?))
}

/// Stream of single-shot realizations drawn from one seeded generator.
#[derive(Debug, Clone)]
pub struct ShotSampler {
    rng: ChaCha8Rng,
}

impl ShotSampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Draw the hold field for one shot (gauss).
    pub fn draw_field(&mut self, noise: &NoiseModel) -> f64 {
        if noise.sigma_b == 0.0 {
            noise.mean_bz
        } else {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            noise.mean_bz + noise.sigma_b * z
        }
    }

    pub fn shot(
        &mut self,
        u_in: &PoincareVector,
        t_store: f64,
        tau_d: f64,
        eta: f64,
        noise: &NoiseModel,
        consts: &AtomicConstants,
    ) -> Result<StokesVector> {
        if (u_in.norm() - 1.0).abs() > 1e-9 {
            return domain(format!("input state must be pure, |u| = {}", u_in.norm()));
        }
        let bz = self.draw_field(noise);
        let phi = rotation_angle(t_store, tau_d, faraday_frequency(bz, consts));
        let m = memory_mueller(&MemoryParams::new(eta, 1.0, phi)?);
        m.apply(&StokesVector::pure(*u_in))
    }
}

/// One shot of the memory with its own generator derived from `seed`.
pub fn sample_shot(
    u_in: &PoincareVector,
    t_store: f64,
    tau_d: f64,
    eta: f64,
    noise: &NoiseModel,
    consts: &AtomicConstants,
    seed: u64,
) -> Result<StokesVector> {
    ShotSampler::new(seed).shot(u_in, t_store, tau_d, eta, noise, consts)
}

/// Numerical average of the state fidelity over pure inputs (Fibonacci
/// lattice of `n` points on the sphere).
pub fn average_fidelity_numeric(m: &MuellerMatrix, n: usize) -> Result<f64> {
    if n == 0 {
        return domain("need at least one sample point");
    }
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut sum = 0.0;
    for i in 0..n {
        let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
        let r = (1.0 - z * z).sqrt();
        let (s, c) = (golden * i as f64).sin_cos();
        let u = PoincareVector { u1: r * c, u2: r * s, u3: z };
        let out = m.apply_raw(&StokesVector::pure(u).as_array());
        if !(out[0] > 0.0) {
            return Err(Error::Unphysical("process returns no intensity".into()));
        }
        let u_out = PoincareVector { u1: out[1] / out[0], u2: out[2] / out[0], u3: out[3] / out[0] };
        sum += fidelity(&u, &u_out)?;
    }
    Ok(sum / n as f64)
}
