//! State tomography from three PBS settings, process tomography from four
//! input states, and extraction of `(η, α, φ)` from a reconstructed matrix.

use crate::error::{domain, Error, Result};
use crate::memory_model::{memory_mueller, MemoryParams, MuellerMatrix};
use crate::polarization::{measure, stokes_components, MeasurementBasis, StokesVector};
use nalgebra::Matrix4;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Condition number above which a probe set is rejected.
pub const MAX_CONDITION: f64 = 1e8;
/// Residual above which the reconstructed matrix is flagged as not having the memory structure.
pub const STRUCTURE_RESIDUAL_LIMIT: f64 = 0.1;

/// Detector pair readings `(plus, minus)` for the three canonical settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateReadings {
    pub hv: (f64, f64),
    pub da: (f64, f64),
    pub rl: (f64, f64),
}

impl StateReadings {
    /// Noise-free readings of `s`.
    pub fn ideal(s: &StokesVector) -> Self {
        Self {
            hv: measure(s, &MeasurementBasis::HV),
            da: measure(s, &MeasurementBasis::DA),
            rl: measure(s, &MeasurementBasis::RL),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateEstimate {
    /// Reconstructed components; noisy data may lie slightly outside the Stokes cone.
    pub raw: [f64; 4],
    pub degree_of_polarization: f64,
    /// Relative spread `(max − min)/mean` of the three per-basis intensity sums.
    pub s0_spread: f64,
    /// False when `s0_spread` exceeds the tolerance passed to [`state_tomography`].
    pub s0_consistent: bool,
}

impl StateEstimate {
    pub fn stokes(&self) -> Result<StokesVector> {
        StokesVector::from_array(self.raw)
    }
}

pub const DEFAULT_S0_TOLERANCE: f64 = 0.1;

pub fn state_tomography(r: &StateReadings, s0_tolerance: f64) -> Result<StateEstimate> {
    let raw = stokes_components(r.hv.0, r.hv.1, r.da.0, r.da.1, r.rl.0, r.rl.1)?;
    let sums = [r.hv.0 + r.hv.1, r.da.0 + r.da.1, r.rl.0 + r.rl.1];
    let max = sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = sums.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = if raw[0] > 0.0 { (max - min) / raw[0] } else { 0.0 };
    let pol = (raw[1] * raw[1] + raw[2] * raw[2] + raw[3] * raw[3]).sqrt();
    Ok(StateEstimate {
        raw,
        degree_of_polarization: if raw[0] > 0.0 { pol / raw[0] } else { 0.0 },
        s0_spread: spread,
        s0_consistent: spread <= s0_tolerance,
    })
}

/// Probe inputs and the reconstructed outputs of a process-tomography run.
#[derive(Debug, Clone, PartialEq)]
pub struct TomographyRecord {
    pub inputs: [StokesVector; 4],
    pub outputs: [[f64; 4]; 4],
}

impl TomographyRecord {
    pub const CANONICAL_INPUTS: [StokesVector; 4] =
        [StokesVector::H, StokesVector::D, StokesVector::R, StokesVector::L];

    fn input_matrix(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, k| self.inputs[k].as_array()[i])
    }

    /// 2-norm condition number of the stacked input vectors.
    pub fn condition_number(&self) -> f64 {
        let sv = self.input_matrix().singular_values();
        let max = sv.max();
        let min = sv.min();
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessEstimate {
    pub matrix: MuellerMatrix,
    pub condition_number: f64,
}

/// Solve `S_out(k) = M · S_in(k)` for the 16 entries of `M`.
pub fn process_tomography(rec: &TomographyRecord) -> Result<ProcessEstimate> {
    let cond = rec.condition_number();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    let s_in = rec.input_matrix();
    let s_out = Matrix4::from_fn(|i, k| rec.outputs[k][i]);
    // M · S_in = S_out  ⇔  S_inᵀ · Mᵀ = S_outᵀ
    let lu = s_in.transpose().lu();
    let mt = lu.solve(&s_out.transpose()).ok_or(Error::IllConditioned(cond))?;
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = mt[(j, i)];
        }
    }
    Ok(ProcessEstimate { matrix: MuellerMatrix::new(m), condition_number: cond })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryExtraction {
    pub params: MemoryParams,
    /// Frobenius distance to the structured matrix, relative to `η`.
    pub residual: f64,
    /// False when `residual` exceeds [`STRUCTURE_RESIDUAL_LIMIT`].
    pub structured: bool,
}

pub fn extract_memory_params(m: &MuellerMatrix) -> Result<MemoryExtraction> {
    let mm = &m.m;
    if !(mm[0][0] > 0.0) {
        return domain(format!("M00 must be positive, got {}", mm[0][0]));
    }
    let eta = 0.5 * (mm[0][0] + mm[3][3]);
    if !(eta > 0.0) {
        return domain(format!("extracted efficiency {eta} is not positive"));
    }
    let amp = mm[1][1].hypot(mm[2][1]);
    let alpha = (amp / eta).clamp(0.0, 1.0);
    let phi = if amp == 0.0 { 0.0 } else { mm[2][1].atan2(mm[1][1]) };
    let params = MemoryParams { eta: eta.min(1.0), alpha, phi };
    let model = memory_mueller(&MemoryParams { eta, alpha, phi });
    let residual = m.sub(&model).frobenius_norm() / eta;
    Ok(MemoryExtraction { params, residual, structured: residual <= STRUCTURE_RESIDUAL_LIMIT })
}

/// Multiplicative Gaussian gain noise plus an additive background on each
/// detector intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorNoise {
    pub relative_sigma: f64,
    pub background: f64,
}

impl Default for DetectorNoise {
    fn default() -> Self {
        Self { relative_sigma: 0.02, background: 0.0 }
    }
}

impl DetectorNoise {
    pub const NONE: Self = Self { relative_sigma: 0.0, background: 0.0 };

    /// Negative draws are clipped to zero.
    pub fn detect<R: Rng + ?Sized>(&self, intensity: f64, rng: &mut R) -> f64 {
        let gain = if self.relative_sigma > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            1.0 + self.relative_sigma * z
        } else {
            1.0
        };
        (intensity * gain + self.background).max(0.0)
    }

    pub fn readings<R: Rng + ?Sized>(&self, s: &[f64; 4], rng: &mut R) -> StateReadings {
        let half = |v: f64| 0.5 * v;
        let mut pair = |proj: f64| {
            let plus = half(s[0] + proj);
            let minus = half(s[0] - proj);
            (self.detect(plus, rng), self.detect(minus, rng))
        };
        StateReadings { hv: pair(s[1]), da: pair(s[2]), rl: pair(s[3]) }
    }
}

/// Run the 12-measurement protocol against a process given as a map from
/// input Stokes vector to (shot-averaged) output Stokes components.
pub fn synthesize_record<F, R>(
    inputs: [StokesVector; 4],
    mut channel: F,
    detector: &DetectorNoise,
    rng: &mut R,
) -> Result<TomographyRecord>
where
    F: FnMut(&StokesVector) -> Result<[f64; 4]>,
    R: Rng + ?Sized,
{
    let mut outputs = [[0.0; 4]; 4];
    for (out, s_in) in outputs.iter_mut().zip(&inputs) {
        let s_out = channel(s_in)?;
        let readings = detector.readings(&s_out, rng);
        *out = state_tomography(&readings, DEFAULT_S0_TOLERANCE)?.raw;
    }
    Ok(TomographyRecord { inputs, outputs })
}
