use super::decay::weighted_line;
use super::lm::{levenberg_marquardt, LmOptions, LmOutcome, Model};
use super::{chi2_per_dof, std_errors, DataSeries, FitResult};
use crate::error::{Error, Result};
use crate::numerics::optimize::brent_maximize;
use std::f64::consts::PI;

/// `A exp(−γ x²) cos(ω x − φ₀)` with `p = [A, ω, φ₀, γ]`; the undamped
/// variant drops γ.
struct Sinusoid {
    damped: bool,
}

impl Model for Sinusoid {
    fn n_params(&self) -> usize {
        if self.damped { 4 } else { 3 }
    }
    fn value(&self, x: f64, p: &[f64]) -> Option<f64> {
        let e = if self.damped { (-p[3] * x * x).exp() } else { 1.0 };
        Some(p[0] * e * (p[1] * x - p[2]).cos())
    }
    fn gradient(&self, x: f64, p: &[f64], g: &mut [f64]) {
        let e = if self.damped { (-p[3] * x * x).exp() } else { 1.0 };
        let (s, c) = (p[1] * x - p[2]).sin_cos();
        g[0] = e * c;
        g[1] = -p[0] * e * s * x;
        g[2] = p[0] * e * s;
        if self.damped {
            g[3] = -x * x * p[0] * e * c;
        }
    }
}

/// Optional starting values; missing entries are estimated from the data.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SinusoidGuess {
    pub amplitude: Option<f64>,
    pub omega: Option<f64>,
    pub phi0: Option<f64>,
    pub sigma: Option<f64>,
}

/// Split sorted abscissas at gaps wider than five median spacings.
fn chunks(x: &[f64]) -> Vec<std::ops::Range<usize>> {
    if x.len() < 3 {
        return vec![0..x.len()];
    }
    let mut d: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).collect();
    if d.is_empty() {
        return vec![0..x.len()];
    }
    d.sort_by(f64::total_cmp);
    let gap = 5.0 * d[d.len() / 2];
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..x.len() {
        if x[i] - x[i - 1] > gap {
            out.push(start..i);
            start = i;
        }
    }
    out.push(start..x.len());
    out
}

fn spectral_power(data: &DataSeries, omega: f64) -> f64 {
    let mean = data.y.iter().sum::<f64>() / data.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in data.x.iter().zip(&data.y) {
        let (s, c) = (omega * x).sin_cos();
        re += (y - mean) * c;
        im += (y - mean) * s;
    }
    re * re + im * im
}

/// Dominant angular frequency of a contiguous stretch of data.
fn dominant_frequency(data: &DataSeries) -> Option<f64> {
    let span = data.x[data.len() - 1] - data.x[0];
    let mut d: Vec<f64> = data.x.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).collect();
    if !(span > 0.0) || d.is_empty() {
        return None;
    }
    d.sort_by(f64::total_cmp);
    let nyquist = PI / d[d.len() / 2];
    let step = 2.0 * PI / (8.0 * span);
    let n = ((nyquist / step).ceil() as usize).clamp(8, 200_000);
    let (mut best, mut at) = (0.0, 0);
    for k in 1..=n {
        let p = spectral_power(data, k as f64 * step);
        if p > best {
            best = p;
            at = k;
        }
    }
    if !(best > 0.0) {
        return None;
    }
    let c = at as f64 * step;
    let (w, _) = brent_maximize(|w| spectral_power(data, w), (c - step).max(0.5 * step), c + step, 1e-12, 200);
    Some(w)
}

/// Linear projection `y ≈ a cos ωx + b sin ωx` → (amplitude, phase).
fn project(data: &DataSeries, omega: f64) -> (f64, f64) {
    let (mut cc, mut ss, mut cs, mut yc, mut ys) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..data.len() {
        let w2 = data.weight(i).powi(2);
        let (s, c) = (omega * data.x[i]).sin_cos();
        cc += w2 * c * c;
        ss += w2 * s * s;
        cs += w2 * c * s;
        yc += w2 * data.y[i] * c;
        ys += w2 * data.y[i] * s;
    }
    let det = cc * ss - cs * cs;
    if det.abs() <= 1e-14 * cc * ss || det == 0.0 {
        let a = if cc > 0.0 { yc / cc } else { 0.0 };
        return (a.abs(), if a < 0.0 { PI } else { 0.0 });
    }
    let a = (yc * ss - ys * cs) / det;
    let b = (ys * cc - yc * cs) / det;
    (a.hypot(b), b.atan2(a))
}

fn wrap_phase(p: f64) -> f64 {
    let mut v = p.rem_euclid(2.0 * PI);
    if v > PI {
        v -= 2.0 * PI;
    }
    v
}

fn canonical(p: &mut [f64]) {
    if p[1] < 0.0 {
        p[1] = -p[1];
        p[2] = -p[2];
    }
    if p[0] < 0.0 {
        p[0] = -p[0];
        p[2] += PI;
    }
    p[2] = wrap_phase(p[2]);
}

/// Damping rate γ from the decay of per-chunk oscillation amplitudes.
fn damping_from_chunks(data: &DataSeries, parts: &[std::ops::Range<usize>], omega: f64) -> f64 {
    let (mut u, mut v, mut w) = (Vec::new(), Vec::new(), Vec::new());
    for r in parts {
        let sub = data.subset(r.clone());
        if sub.len() < 3 {
            continue;
        }
        let (amp, _) = project(&sub, omega);
        if amp > 0.0 {
            u.push(sub.x.iter().map(|x| x * x).sum::<f64>() / sub.len() as f64);
            v.push(amp.ln());
            w.push(amp * amp);
        }
    }
    match weighted_line(&u, &v, &w) {
        Some((_, slope)) if slope < 0.0 => -slope,
        _ => 0.0,
    }
}

/// Damping rate γ from the second moment of the squared signal.
fn damping_from_moment(data: &DataSeries) -> f64 {
    let num: f64 = data.x.iter().zip(&data.y).map(|(x, y)| x * x * y * y).sum();
    let den: f64 = data.y.iter().map(|y| y * y).sum();
    if num > 0.0 { den / (4.0 * num) } else { 0.0 }
}

fn continuation(data: &DataSeries, guess: &SinusoidGuess, damped: bool) -> Result<LmOutcome> {
    if data.len() < if damped { 4 } else { 3 } {
        return Err(Error::NonIdentifiable(format!("{} points are too few for a sinusoid", data.len())));
    }
    if data.is_constant() {
        return Err(Error::NonIdentifiable("constant data carries no oscillation".into()));
    }
    let parts = chunks(&data.x);
    let first = data.subset(parts[0].clone());
    let omega = match guess.omega {
        Some(w) => w,
        None => dominant_frequency(&first)
            .or_else(|| dominant_frequency(data))
            .ok_or_else(|| Error::NonIdentifiable("no oscillation frequency found".into()))?,
    };
    let (amp, phase) = project(&first, omega);
    let mut p = vec![guess.amplitude.unwrap_or(amp), omega, guess.phi0.unwrap_or(phase)];
    let opts = LmOptions::default();
    let stage0 = if first.len() >= 3 { &first } else { data };
    let mut out = levenberg_marquardt(&Sinusoid { damped: false }, stage0, &p, opts)?;
    p = out.params.clone();
    if parts.len() == 1 && !damped {
        return Ok(out);
    }
    let stages: Vec<usize> = if parts.len() == 1 { vec![data.len()] } else { parts[1..].iter().map(|r| r.end).collect() };
    for (k, end) in stages.into_iter().enumerate() {
        let sub = data.subset(0..end);
        let start = if !damped || p.len() == 4 {
            p.clone()
        } else {
            let g = match guess.sigma {
                Some(s) => 1.0 / (2.0 * s * s),
                None if parts.len() > 1 => damping_from_chunks(&sub, &parts[..k + 2], p[1]),
                None => damping_from_moment(&sub),
            };
            vec![p[0], p[1], p[2], g]
        };
        out = levenberg_marquardt(&Sinusoid { damped }, &sub, &start, opts)?;
        p = out.params.clone();
    }
    Ok(out)
}

fn finish(mut out: LmOutcome, damped: bool) -> FitResult {
    canonical(&mut out.params);
    let errs = std_errors(&out);
    let p = &out.params;
    if damped {
        let g = p[3];
        let sigma = if g > 0.0 { (2.0 * g).sqrt().recip() } else { f64::INFINITY };
        let errs = errs.map(|e| vec![if g > 0.0 { sigma.powi(3) * e[3] } else { f64::INFINITY }, e[1], e[2], e[0]]);
        FitResult {
            names: vec!["sigma_alpha", "omega_f", "phi0", "amplitude"],
            params: vec![sigma, p[1], p[2], p[0]],
            std_errors: errs,
            chi2_per_dof: chi2_per_dof(&out),
            converged: out.converged,
            iterations: out.iterations,
        }
    } else {
        FitResult {
            names: vec!["amplitude", "omega_f", "phi0"],
            params: p.clone(),
            std_errors: errs,
            chi2_per_dof: chi2_per_dof(&out),
            converged: out.converged,
            iterations: out.iterations,
        }
    }
}

/// Fit `y = A exp(−x²/2σ²) cos(ω x − φ₀)`.
///
/// Data separated by gaps are fitted progressively: the first contiguous
/// block fixes the frequency and phase, and each further block is added
/// with the previous solution as starting point so that the phase is
/// carried across the gap.
pub fn fit_damped_sinusoid(data: &DataSeries, guess: Option<SinusoidGuess>) -> Result<FitResult> {
    let data = data.sorted();
    let out = continuation(&data, &guess.unwrap_or_default(), true)?;
    Ok(finish(out, true))
}

/// Fit `y = A cos(ω x − φ₀)` (no damping).
pub fn fit_sinusoid(data: &DataSeries, guess: Option<SinusoidGuess>) -> Result<FitResult> {
    let data = data.sorted();
    let out = continuation(&data, &guess.unwrap_or_default(), false)?;
    Ok(finish(out, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::AtomicConstants;
    use crate::memory_model::{sigma_alpha_from_noise, NoiseModel, NoisePreset, ShotSampler};
    use crate::polarization::PoincareVector;

    fn gapped_grid() -> Vec<f64> {
        let mut x = Vec::new();
        for s in [0.0, 200.0, 500.0, 1000.0, 1500.0, 2000.0] {
            for k in 0..=40 {
                x.push((s + 0.5 * k as f64) * 1e-6);
            }
        }
        x
    }

    fn trace(x: &[f64], a: f64, sigma: f64, omega: f64, phi0: f64) -> DataSeries {
        let y = x.iter().map(|t| a * (-t * t / (2.0 * sigma * sigma)).exp() * (omega * t - phi0).cos()).collect();
        DataSeries::new(x.to_vec(), y, None).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn damped_round_trip_on_gapped_grid() {
        let omega = 2.0 * PI * 0.2e6;
        let r = fit_damped_sinusoid(&trace(&gapped_grid(), 1.0, 1.1e-3, omega, 0.3), None).unwrap();
        assert!(r.converged);
        assert!(rel(r.get("sigma_alpha").unwrap(), 1.1e-3) < 1e-6, "{r:?}");
        assert!(rel(r.get("omega_f").unwrap(), omega) < 1e-6);
        assert!(rel(r.get("phi0").unwrap(), 0.3) < 1e-6);
        assert!(rel(r.get("amplitude").unwrap(), 1.0) < 1e-6);
    }

    #[test]
    fn damped_round_trip_contiguous() {
        let x: Vec<f64> = (0..400).map(|i| i as f64 * 0.25e-6).collect();
        let omega = 2.0 * PI * 0.05e6;
        let r = fit_damped_sinusoid(&trace(&x, 0.7, 40e-6, omega, -1.2), None).unwrap();
        assert!(rel(r.get("sigma_alpha").unwrap(), 40e-6) < 1e-6, "{r:?}");
        assert!(rel(r.get("omega_f").unwrap(), omega) < 1e-6);
        assert!(rel(r.get("phi0").unwrap(), -1.2) < 1e-6);
        assert!(rel(r.get("amplitude").unwrap(), 0.7) < 1e-6);
    }

    #[test]
    fn undamped_round_trip() {
        let x: Vec<f64> = (0..=40).map(|k| k as f64 * 0.5e-6).collect();
        let omega = 2.0 * PI * 0.196e6;
        let y = x.iter().map(|t| 1.02 * (omega * t - 2.5).cos()).collect();
        let r = fit_sinusoid(&DataSeries::new(x, y, None).unwrap(), None).unwrap();
        assert!(rel(r.get("amplitude").unwrap(), 1.02) < 1e-6);
        assert!(rel(r.get("omega_f").unwrap(), omega) < 1e-6);
        assert!(rel(r.get("phi0").unwrap(), 2.5) < 1e-6);
    }

    #[test]
    fn explicit_guess_is_used() {
        let omega = 2.0 * PI * 0.2e6;
        let g = SinusoidGuess { omega: Some(omega * 1.001), sigma: Some(1e-3), ..Default::default() };
        let r = fit_damped_sinusoid(&trace(&gapped_grid(), 1.0, 1.1e-3, omega, 0.3), Some(g)).unwrap();
        assert!(rel(r.get("sigma_alpha").unwrap(), 1.1e-3) < 1e-6);
    }

    #[test]
    fn constant_data_not_identifiable() {
        let x = gapped_grid();
        let d = DataSeries::new(x.clone(), vec![1.0; x.len()], None).unwrap();
        let g = SinusoidGuess { omega: Some(1e6), ..Default::default() };
        assert!(matches!(fit_damped_sinusoid(&d, Some(g)), Err(Error::NonIdentifiable(_))));
        assert!(matches!(fit_sinusoid(&d, None), Err(Error::NonIdentifiable(_))));
    }

    #[test]
    fn order_invariant() {
        let d = trace(&gapped_grid(), 1.0, 0.9e-3, 2.0 * PI * 0.19e6, 1.0);
        let rev = DataSeries::new(d.x.iter().rev().cloned().collect(), d.y.iter().rev().cloned().collect(), None).unwrap();
        assert_eq!(fit_damped_sinusoid(&d, None).unwrap(), fit_damped_sinusoid(&rev, None).unwrap());
    }

    #[test]
    fn shot_data_recovers_damping_time() {
        let consts = AtomicConstants::rubidium87_d1();
        let noise = NoiseModel::from_preset(NoisePreset::LineSynced, 0.14).unwrap();
        let truth = sigma_alpha_from_noise(noise.sigma_b, &consts).unwrap();
        let mut sampler = ShotSampler::new(7);
        let x = gapped_grid();
        let y = x
            .iter()
            .map(|&t| {
                let s = sampler.shot(&PoincareVector::H, t, 550e-9, 1.0, &noise, &consts).unwrap();
                s.s1 / s.s0
            })
            .collect();
        let r = fit_damped_sinusoid(&DataSeries::new(x, y, None).unwrap(), None).unwrap();
        assert!(r.converged);
        assert!((r.get("sigma_alpha").unwrap() - truth).abs() < 0.2e-3, "{r:?} vs {truth}");
        assert!(rel(r.get("omega_f").unwrap(), 2.0 * PI * 0.196e6) < 1e-3);
    }
}
