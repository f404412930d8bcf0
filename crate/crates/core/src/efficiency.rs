//! Write-read efficiency estimate: the compressed fraction of a Gaussian
//! pulse at control switch-off times the fraction transmitted through the
//! EIT window, optionally averaged over the transverse probe profile, plus
//! the storage-time decay models.

use crate::constants::{AtomicConstants, SPEED_OF_LIGHT};
use crate::eit_optics::{check_compression_condition, pulse_delay, transparency_width, CompressionDiagnostic, DepthProfile};
use crate::error::{domain, Result};
use crate::numerics::optimize::{brent_maximize, nelder_mead_2d};
use crate::numerics::quad::{integrate, integrate_with_breaks, QuadOptions};
use crate::numerics::special::bessel_i0e;
use rayon::prelude::*;
use libm::erf;
use std::f64::consts::{PI, SQRT_2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseParams {
    /// Temporal rms width of the intensity (s).
    pub tau_p: f64,
    /// Control switch-off time after the pulse peak enters the medium (s).
    pub t0: f64,
    pub i0: f64,
    /// Probe 1/e² intensity radius (m).
    pub waist: f64,
}

impl PulseParams {
    pub fn new(tau_p: f64, t0: f64, i0: f64, waist: f64) -> Result<Self> {
        if !(tau_p > 0.0) || !(waist > 0.0) {
            return domain(format!("pulse width and waist must be positive (tau_p = {tau_p}, w = {waist})"));
        }
        Ok(Self { tau_p, t0, i0, waist })
    }

    /// τ_p = 94 ns, t₀ = 230 ns, w = 8 µm.
    pub fn reference() -> Self {
        Self { tau_p: 94e-9, t0: 230e-9, i0: 1.0, waist: 8e-6 }
    }
}

/// Pulse width after dispersive propagation: `τ_p² + [τ_d/(τ_p ω_p)]²`.
pub fn dispersion_broadened_width(tau_p: f64, tau_d: f64, omega_p: f64) -> f64 {
    let extra = tau_d / (tau_p * omega_p);
    (tau_p * tau_p + extra * extra).sqrt()
}

/// Intensity of the slowed pulse at time `t` and depth `z`, given the delay
/// `tau_d` accumulated up to `z`. `omega_p` enables dispersive broadening.
pub fn pulse_intensity(t: f64, z: f64, pulse: &PulseParams, tau_d: f64, omega_p: Option<f64>) -> f64 {
    let width = match omega_p {
        Some(w) => dispersion_broadened_width(pulse.tau_p, tau_d, w),
        None => pulse.tau_p,
    };
    let dt = t - tau_d - z / SPEED_OF_LIGHT;
    pulse.i0 * (-dt * dt / (2.0 * width * width)).exp()
}

/// Fraction of the pulse inside the medium at switch-off.
pub fn eta_comp(t0: f64, tau_p: f64, tau_d: f64, length: f64) -> f64 {
    let s = SQRT_2 * tau_p;
    let v = 0.5 * (erf(t0 / s) - erf((t0 - tau_d - length / SPEED_OF_LIGHT) / s));
    v.clamp(0.0, 1.0)
}

/// Energy fraction transmitted through the Gaussian EIT window.
pub fn eta_trans(tau_p: f64, delta_omega_trans: f64) -> f64 {
    let x = tau_p * delta_omega_trans;
    (1.0 + 2.0 / (x * x)).powf(-0.5)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyResult {
    pub eta_comp: f64,
    pub eta_trans: f64,
    pub eta_total: f64,
    /// Absent outside the cloud.
    pub diagnostics: Option<CompressionDiagnostic>,
}

/// Parameters of the efficiency estimate that do not vary across a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyModel {
    /// Γ (rad/s).
    pub gamma: f64,
    pub tau_p: f64,
    /// Medium length entering the L/c term (m); zero neglects it.
    pub length: f64,
    /// Use the absorption-broadened width τ_p(L) = τ_p/η_trans inside η_comp.
    pub broadened_width: bool,
}

impl EfficiencyModel {
    pub fn new(gamma: f64, tau_p: f64, length: f64) -> Self {
        Self { gamma, tau_p, length, broadened_width: false }
    }

    pub fn eta_total(&self, omega_c: f64, t0: f64, d_p: f64) -> EfficiencyResult {
        if !(d_p > 0.0) {
            return EfficiencyResult { eta_comp: 0.0, eta_trans: 1.0, eta_total: 0.0, diagnostics: None };
        }
        let tau_d = pulse_delay(omega_c, d_p, self.gamma);
        let width = transparency_width(omega_c, self.gamma, d_p).expect("positive depth");
        let trans = eta_trans(self.tau_p, width);
        let tau_eff = if self.broadened_width { self.tau_p / trans } else { self.tau_p };
        let comp = eta_comp(t0, tau_eff, tau_d, self.length);
        EfficiencyResult {
            eta_comp: comp,
            eta_trans: trans,
            eta_total: comp * trans,
            diagnostics: Some(check_compression_condition(tau_d, self.tau_p, d_p)),
        }
    }

    pub fn eta(&self, omega_c: f64, t0: f64, d_p: f64) -> f64 {
        self.eta_total(omega_c, t0, d_p).eta_total
    }

    /// Same model with every timescale multiplied by `s`.
    pub fn rescaled(&self, s: f64) -> Self {
        Self { tau_p: self.tau_p * s, ..*self }
    }
}

pub fn eta_total(model: &EfficiencyModel, omega_c: f64, t0: f64, d_p: f64) -> EfficiencyResult {
    model.eta_total(omega_c, t0, d_p)
}

fn radial_breaks(profile: &DepthProfile, waist: f64) -> Vec<f64> {
    let scale = waist / profile.rx.max(profile.ry);
    let mut b = vec![0.0];
    let mut k = 0.5;
    while k * scale < 1.0 && k <= 64.0 {
        b.push(k * scale);
        k *= 2.0;
    }
    b.push(1.0);
    b
}

/// Gaussian-weighted transverse average of `eta_of_depth(d(x, y))`.
///
/// Uses elliptic coordinates x = Rx ρ̃ cos φ, y = Ry ρ̃ sin φ: the angular
/// integral reduces to a Bessel function, leaving
/// `(4 Rx Ry / w²) ∫₀¹ ρ̃ e^{−ρ̃²(Rx²+Ry²)/w²} I₀(ρ̃²(Rx²−Ry²)/w²) η(d(ρ̃)) dρ̃`.
pub fn transverse_average<F: Fn(f64) -> f64>(eta_of_depth: F, profile: &DepthProfile, waist: f64) -> f64 {
    let (rx, ry) = (profile.rx, profile.ry);
    if waist <= 1e-9 * rx.min(ry) {
        return eta_of_depth(profile.peak);
    }
    let w2 = waist * waist;
    let rmin2 = rx.min(ry).powi(2);
    let diff = (rx * rx - ry * ry).abs() / w2;
    let integrand = |rho: f64| {
        let r2 = rho * rho;
        let weight = rho * (-2.0 * r2 * rmin2 / w2).exp() * bessel_i0e(r2 * diff);
        if weight == 0.0 {
            0.0
        } else {
            weight * eta_of_depth(profile.depth_at_scaled_radius(rho))
        }
    };
    let r = integrate_with_breaks(integrand, &radial_breaks(profile, waist), QuadOptions::with_tol(1e-15, 1e-10));
    4.0 * rx * ry / w2 * r.value
}

/// Same average by direct 2-D adaptive quadrature over the ellipse in
/// Cartesian coordinates. Slower; kept as an independent route.
pub fn transverse_average_cartesian<F: Fn(f64) -> f64>(eta_of_depth: F, profile: &DepthProfile, waist: f64) -> f64 {
    let (rx, ry) = (profile.rx, profile.ry);
    let w2 = waist * waist;
    let norm = 2.0 / (PI * w2);
    let inner = |x: f64| {
        let ymax = ry * (1.0 - (x / rx).powi(2)).max(0.0).sqrt();
        if ymax == 0.0 {
            return 0.0;
        }
        let gx = (-2.0 * x * x / w2).exp();
        let f = |y: f64| gx * (-2.0 * y * y / w2).exp() * eta_of_depth(profile.depth(x, y));
        let ybreak = (2.0 * waist).min(ymax);
        integrate_with_breaks(f, &[0.0, ybreak, ymax], QuadOptions::with_tol(1e-16, 1e-11)).value
    };
    let xbreak = (2.0 * waist).min(rx);
    let outer = integrate_with_breaks(inner, &[0.0, xbreak, rx], QuadOptions::with_tol(1e-16, 1e-10));
    4.0 * norm * outer.value
}

/// Transverse average of η for a control setting.
pub fn transverse_average_eta(model: &EfficiencyModel, omega_c: f64, t0: f64, profile: &DepthProfile, waist: f64) -> f64 {
    transverse_average(|d| model.eta(omega_c, t0, d), profile, waist)
}

/// Column-dependent upper edge of the t₀ grid: `multiple·τ_p + τ_d(Ω_c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayReach {
    pub gamma: f64,
    pub d_p: f64,
    pub tau_p: f64,
    pub multiple: f64,
}

impl DelayReach {
    pub fn at(&self, omega_c: f64) -> f64 {
        self.multiple * self.tau_p + pulse_delay(omega_c, self.d_p, self.gamma)
    }
}

/// Search window for [`optimize_eta`]: log-spaced Ω_c, linear t₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeBounds {
    pub omega_min: f64,
    pub omega_max: f64,
    pub t0_min: f64,
    /// Outer limit on t₀.
    pub t0_max: f64,
    /// When set, each Ω_c column spans t₀ up to `min(t0_max, reach(Ω_c))`.
    pub reach: Option<DelayReach>,
    pub n_omega: usize,
    pub n_t0: usize,
}

impl OptimizeBounds {
    /// Ω_c ∈ 2π×[1, 100] MHz, t₀ ∈ [0, 5τ_p + τ_d(Ω_c)], 200×200 points.
    pub fn standard(model: &EfficiencyModel, peak_depth: f64) -> Self {
        let omega_min = 2.0 * PI * 1e6;
        let reach = DelayReach { gamma: model.gamma, d_p: peak_depth, tau_p: model.tau_p, multiple: 5.0 };
        Self {
            omega_min,
            omega_max: 2.0 * PI * 100e6,
            t0_min: 0.0,
            t0_max: reach.at(omega_min),
            reach: Some(reach),
            n_omega: 200,
            n_t0: 200,
        }
    }

    fn omega_at(&self, i: usize) -> f64 {
        if self.n_omega <= 1 || self.omega_min == self.omega_max {
            return self.omega_min;
        }
        let f = i as f64 / (self.n_omega - 1) as f64;
        (self.omega_min.ln() + f * (self.omega_max / self.omega_min).ln()).exp()
    }

    fn t0_span(&self, omega_c: f64) -> f64 {
        let top = match self.reach {
            Some(r) => r.at(omega_c).min(self.t0_max),
            None => self.t0_max,
        };
        (top - self.t0_min).max(0.0)
    }

    fn t0_at(&self, omega_c: f64, u: f64) -> f64 {
        self.t0_min + u * self.t0_span(omega_c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub omega_c: f64,
    pub t0: f64,
    pub eta: f64,
    /// Best point of the coarse grid `(Ω_c, t₀, η)`.
    pub grid_best: (f64, f64, f64),
    /// The optimum sits on the edge of the search window.
    pub on_boundary: bool,
}

/// Grid search over (Ω_c, t₀) followed by simplex refinement.
pub fn optimize_eta<F>(objective: F, bounds: &OptimizeBounds) -> Result<Optimum>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    if !(bounds.omega_min > 0.0 && bounds.omega_max >= bounds.omega_min && bounds.t0_max >= bounds.t0_min) {
        return domain("invalid optimization bounds");
    }
    let n_om = if bounds.omega_min == bounds.omega_max { 1 } else { bounds.n_omega.max(2) };
    let n_t = bounds.n_t0.max(2);
    let du = 1.0 / (n_t - 1) as f64;
    let grid: Vec<(usize, usize, f64)> = (0..n_om * n_t)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n_t, k % n_t);
            let om = bounds.omega_at(i);
            (i, j, objective(om, bounds.t0_at(om, j as f64 * du)))
        })
        .collect();
    let &(bi, bj, beta) = grid
        .iter()
        .fold(None, |acc: Option<&(usize, usize, f64)>, p| match acc {
            Some(a) if a.2 >= p.2 => Some(a),
            _ => Some(p),
        })
        .expect("non-empty grid");
    let om0 = bounds.omega_at(bi);
    let u0 = bj as f64 * du;
    let t00 = bounds.t0_at(om0, u0);
    let (omega_c, u, eta) = if n_om == 1 {
        let lo = (u0 - du).max(0.0);
        let hi = (u0 + du).min(1.0);
        let (u, v) = brent_maximize(|u| objective(om0, bounds.t0_at(om0, u)), lo, hi, 1e-12, 500);
        if v >= beta { (om0, u, v) } else { (om0, u0, beta) }
    } else {
        let lo = [bounds.omega_min.ln(), 0.0];
        let hi = [bounds.omega_max.ln(), 1.0];
        let step = [(hi[0] - lo[0]) / (n_om - 1) as f64, du];
        let r = nelder_mead_2d(
            |p| {
                let om = p[0].exp();
                -objective(om, bounds.t0_at(om, p[1]))
            },
            [om0.ln(), u0],
            step,
            lo,
            hi,
            1e-12,
            4000,
        );
        if -r.value >= beta { (r.x[0].exp(), r.x[1], -r.value) } else { (om0, u0, beta) }
    };
    let t0 = bounds.t0_at(omega_c, u);
    let om_span = bounds.omega_max - bounds.omega_min;
    let near = |v: f64, edge: f64, scale: f64| (v - edge).abs() <= 1e-6 * scale;
    let on_boundary = (n_om > 1 && (near(omega_c, bounds.omega_min, om_span) || near(omega_c, bounds.omega_max, om_span)))
        || u <= 1e-6
        || u >= 1.0 - 1e-6;
    Ok(Optimum { omega_c, t0, eta, grid_best: (om0, t00, beta), on_boundary })
}

/// `m w / (√2 ħ k_c)`: recoil-limited e^{-1/2} time of η for a Gaussian
/// detection mode of waist `waist`.
pub fn recoil_sigma_eta(consts: &AtomicConstants, waist: f64, lambda_c: f64) -> Result<f64> {
    if !(waist > 0.0 && lambda_c > 0.0) {
        return domain("waist and control wavelength must be positive");
    }
    let k_c = 2.0 * PI / lambda_c;
    Ok(consts.mass * waist / (SQRT_2 * consts.hbar * k_c))
}

pub fn eta_decay(t_store: f64, eta0: f64, sigma_eta: f64) -> Result<f64> {
    if !(sigma_eta > 0.0) {
        return domain(format!("decay time must be positive, got {sigma_eta}"));
    }
    Ok(eta0 * (-t_store * t_store / (2.0 * sigma_eta * sigma_eta)).exp())
}

/// Probe and control wavelengths and the angle between the beams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamGeometry {
    pub lambda_p: f64,
    pub lambda_c: f64,
    /// Angle between the probe and control wave vectors (rad).
    pub angle: f64,
}

impl BeamGeometry {
    pub fn perpendicular(lambda_p: f64, lambda_c: f64) -> Self {
        Self { lambda_p, lambda_c, angle: 0.5 * PI }
    }

    /// |k_p − k_c|.
    pub fn differential_wavevector(&self) -> f64 {
        let kp = 2.0 * PI / self.lambda_p;
        let kc = 2.0 * PI / self.lambda_c;
        (kp * kp + kc * kc - 2.0 * kp * kc * self.angle.cos()).max(0.0).sqrt()
    }
}

pub fn thermal_de_broglie_wavelength(temperature: f64, consts: &AtomicConstants) -> Result<f64> {
    if !(temperature > 0.0) {
        return domain(format!("temperature must be positive, got {temperature}"));
    }
    Ok((2.0 * PI * consts.hbar * consts.hbar / (consts.mass * consts.k_b * temperature)).sqrt())
}

/// Coarse decay time λ_dB / v_rel of the uncondensed contribution.
pub fn thermal_decay_time(temperature: f64, consts: &AtomicConstants, geometry: &BeamGeometry) -> Result<f64> {
    let lambda_db = thermal_de_broglie_wavelength(temperature, consts)?;
    let v_rel = consts.hbar * geometry.differential_wavevector() / consts.mass;
    if !(v_rel > 0.0) {
        return domain("co-propagating identical beams give no relative velocity");
    }
    Ok(lambda_db / v_rel)
}

/// Normalized η(t) of a partly condensed gas: condensate and thermal parts
/// each decay as Gaussians.
pub fn bimodal_eta(t_store: f64, condensate_fraction: f64, sigma_bec: f64, thermal_time: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&condensate_fraction) {
        return domain(format!("condensate fraction must lie in [0, 1], got {condensate_fraction}"));
    }
    let g = |s: f64| if s.is_infinite() { 1.0 } else { (-t_store * t_store / (2.0 * s * s)).exp() };
    if !(sigma_bec > 0.0 && thermal_time > 0.0) {
        return domain("decay times must be positive");
    }
    Ok(condensate_fraction * g(sigma_bec) + (1.0 - condensate_fraction) * g(thermal_time))
}

/// Time-domain route for η_comp: integrate the normalized input Gaussian over
/// the window that has entered the medium at switch-off.
pub fn compressed_fraction_by_quadrature(t0: f64, tau_p: f64, tau_d: f64, length: f64) -> f64 {
    let lo = t0 - tau_d - length / SPEED_OF_LIGHT;
    let norm = 1.0 / (2.0 * PI).sqrt();
    integrate(|u| norm * (-0.5 * u * u).exp(), lo / tau_p, t0 / tau_p, QuadOptions::with_tol(1e-15, 1e-13)).value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::RB87_D1_WAVELENGTH;
    use crate::eit_optics::MediumParams;
    use proptest::prelude::*;

    const NS: f64 = 1e-9;
    const MHZ: f64 = 2.0 * PI * 1e6;

    fn gamma() -> f64 {
        1.0 / (26.0 * NS)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn intensity_peak_and_width() {
        let p = PulseParams::reference();
        let td = 550.0 * NS;
        let z = 10e-6;
        let t_peak = td + z / SPEED_OF_LIGHT;
        assert_eq!(pulse_intensity(t_peak, z, &p, td, None), 1.0);
        let v = pulse_intensity(t_peak + p.tau_p, z, &p, td, None);
        assert!((v - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(pulse_intensity(0.3e-9, 0.0, &p, 0.0, None), pulse_intensity(0.3e-9, 0.0, &p, 0.0, Some(1e15)));
    }

    #[test]
    fn dispersion_broadening_negligible() {
        let omega_p = 2.0 * PI * SPEED_OF_LIGHT / RB87_D1_WAVELENGTH;
        let w = dispersion_broadened_width(94.0 * NS, 550.0 * NS, omega_p);
        assert!(rel(w, 94.0 * NS) < 1e-6);
    }

    #[test]
    fn comp_examples() {
        assert_eq!(eta_comp(0.0, 94.0 * NS, 0.0, 0.0), 0.0);
        assert!(eta_comp(1.0, 94.0 * NS, 1e-6, 0.0) < 1e-300);
        assert!((eta_comp(1e3, 94.0 * NS, 1e4, 0.0) - 1.0).abs() < 1e-15);
        let v = eta_comp(230.0 * NS, 94.0 * NS, 550.0 * NS, 0.0);
        let oracle = compressed_fraction_by_quadrature(230.0 * NS, 94.0 * NS, 550.0 * NS, 0.0);
        assert!((v - oracle).abs() < 1e-10);
        assert!((v - 0.9924619069581897).abs() < 1e-12);
    }

    #[test]
    fn comp_matches_quadrature_on_grid() {
        let tau = 94.0 * NS;
        for i in 0..12 {
            for j in 0..12 {
                let t0 = -200.0 * NS + 60.0 * NS * i as f64;
                let td = 40.0 * NS * j as f64;
                for len in [0.0, 50e-6] {
                    let a = eta_comp(t0, tau, td, len);
                    let b = compressed_fraction_by_quadrature(t0, tau, td, len);
                    assert!((a - b).abs() <= 1e-10, "t0 {t0} td {td}: {a} vs {b}");
                }
            }
        }
    }

    // Transmitted fraction of the spectral energy through the Beer-Lambert
    // window of the approximate line shape, by direct quadrature.
    fn spectral_overlap(tau_p: f64, omega_c: f64, d_p: f64, gamma: f64) -> (f64, f64) {
        let spectrum = |x: f64| (-2.0 * x * x * tau_p * tau_p).exp();
        let window = |x: f64| {
            let a = 2.0 * gamma * x / (omega_c * omega_c);
            (-d_p * a * a).exp()
        };
        let lim = 12.0 / tau_p;
        let window_scale = omega_c * omega_c / (2.0 * gamma * d_p.sqrt());
        let lim_prod = 12.0 * window_scale.min(1.0 / tau_p);
        let opts = QuadOptions::with_tol(0.0, 1e-13);
        let num = integrate(|x| spectrum(x) * window(x), -lim_prod, lim_prod, opts).value;
        let den = integrate(spectrum, -lim, lim, opts).value;
        let second = integrate(|x| x * x * spectrum(x) * window(x), -lim_prod, lim_prod, opts).value;
        (num / den, (second / num).sqrt())
    }

    #[test]
    fn trans_examples() {
        assert!((eta_trans(1.0, 1e9) - 1.0).abs() < 1e-15);
        assert!((eta_trans(1.0, SQRT_2) - 1.0 / SQRT_2).abs() < 1e-15);
        let v = eta_trans(94.0 * NS, 3.3 * MHZ);
        assert!((v - 0.8093821345045521).abs() < 1e-12);
    }

    #[test]
    fn trans_matches_spectral_overlap() {
        let g = gamma();
        for &om in &[3.0, 8.0, 15.0, 40.0] {
            for &d in &[5.0, 50.0, 127.0, 400.0] {
                for &tp in &[30.0, 94.0, 300.0] {
                    let tau_p = tp * NS;
                    let omega_c = om * MHZ;
                    let closed = eta_trans(tau_p, transparency_width(omega_c, g, d).unwrap());
                    let (oracle, sigma) = spectral_overlap(tau_p, omega_c, d, g);
                    assert!(rel(closed, oracle) < 1e-6, "{om} {d} {tp}: {closed} vs {oracle}");
                    // transform-limited width of the transmitted spectrum
                    assert!(rel(tau_p / closed, 1.0 / (2.0 * sigma)) < 1e-6);
                }
            }
        }
    }

    #[test]
    fn total_outside_cloud() {
        let m = EfficiencyModel::new(gamma(), 94.0 * NS, 0.0);
        let r = m.eta_total(15.0 * MHZ, 230.0 * NS, 0.0);
        assert_eq!((r.eta_comp, r.eta_trans, r.eta_total), (0.0, 1.0, 0.0));
        assert!(r.diagnostics.is_none());
    }

    #[test]
    fn on_axis_fig7_maximum() {
        let m = EfficiencyModel::new(gamma(), 94.0 * NS, 0.0);
        let (mut best, mut at) = (0.0, 0.0);
        for i in 0..4000 {
            let om = (5.0 + 0.01 * i as f64) * MHZ;
            let v = m.eta(om, 230.0 * NS, 127.0);
            if v > best {
                best = v;
                at = om;
            }
        }
        assert!((best - 0.847).abs() < 2e-3, "{best}");
        assert!((at / MHZ - 17.2).abs() < 0.3, "{}", at / MHZ);
    }

    #[test]
    fn large_control_kills_compression() {
        let m = EfficiencyModel::new(gamma(), 94.0 * NS, 0.0);
        let mut prev = f64::INFINITY;
        for i in 0..60 {
            let om = 40.0 * MHZ * 1.1f64.powi(i);
            let r = m.eta_total(om, 230.0 * NS, 127.0);
            assert!(r.eta_comp <= prev + 1e-15);
            prev = r.eta_comp;
        }
        assert!(prev < 1e-3);
        assert!(m.eta_total(1e6 * MHZ, 230.0 * NS, 127.0).eta_trans > 1.0 - 1e-12);
    }

    #[test]
    fn ranges_over_sweep() {
        let m = EfficiencyModel { broadened_width: true, ..EfficiencyModel::new(gamma(), 94.0 * NS, 50e-6) };
        for i in 0..40 {
            for j in 0..40 {
                let om = (0.5 + 3.0 * i as f64) * MHZ;
                let t0 = -300.0 * NS + 40.0 * NS * j as f64;
                let r = m.eta_total(om, t0, 127.0);
                for v in [r.eta_comp, r.eta_trans, r.eta_total] {
                    assert!((0.0..=1.0).contains(&v));
                }
                assert_eq!(r.eta_total, r.eta_comp * r.eta_trans);
            }
        }
    }

    #[test]
    fn broadened_mode_lowers_compression_at_short_delay() {
        let base = EfficiencyModel::new(gamma(), 94.0 * NS, 0.0);
        let wide = EfficiencyModel { broadened_width: true, ..base };
        let (a, b) = (base.eta_total(17.0 * MHZ, 230.0 * NS, 127.0), wide.eta_total(17.0 * MHZ, 230.0 * NS, 127.0));
        assert_eq!(a.eta_trans, b.eta_trans);
        assert!(b.eta_comp < a.eta_comp);
    }

    #[test]
    fn scaling_invariance() {
        let m = EfficiencyModel::new(gamma(), 94.0 * NS, 0.0);
        for &s in &[0.5, 2.0, 5.0] {
            let ms = m.rescaled(s);
            for i in 0..15 {
                for j in 0..15 {
                    let om = (2.0 + 4.0 * i as f64) * MHZ;
                    let t0 = -100.0 * NS + 50.0 * NS * j as f64;
                    for &d in &[10.0, 127.0] {
                        let a = m.eta(om, t0, d);
                        let b = ms.eta(om / s.sqrt(), s * t0, d);
                        assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-300) || (a - b).abs() < 1e-15, "s {s}: {a} vs {b}");
                    }
                }
            }
        }
    }

    fn reference_profile() -> DepthProfile {
        DepthProfile::from_medium(&MediumParams::reference()).with_peak(127.0)
    }

    #[test]
    fn average_small_waist_is_on_axis() {
        let m = EfficiencyModel::new(gamma(), 94.0 * NS, 0.0);
        let p = reference_profile();
        let on_axis = m.eta(15.0 * MHZ, 230.0 * NS, 127.0);
        let avg = transverse_average_eta(&m, 15.0 * MHZ, 230.0 * NS, &p, 1e-9);
        assert!(rel(avg, on_axis) < 1e-4);
        let exact = transverse_average_eta(&m, 15.0 * MHZ, 230.0 * NS, &p, 1e-16);
        assert_eq!(exact, on_axis);
    }

    #[test]
    fn average_of_constant_is_enclosed_power() {
        // η ≡ 1 inside the cloud: result is the Gaussian power inside a disc.
        let p = DepthProfile { peak: 10.0, rx: 5e-6, ry: 5e-6 };
        let w = 8e-6;
        let v = transverse_average(|d| if d > 0.0 { 1.0 } else { 0.0 }, &p, w);
        let expect = 1.0 - (-2.0 * 25.0 / 64.0f64).exp();
        assert!(rel(v, expect) < 1e-9, "{v} vs {expect}");
    }

    #[test]
    fn wide_beam_bound() {
        let m = EfficiencyModel::new(gamma(), 94.0 * NS, 0.0);
        let p = DepthProfile { peak: 127.0, rx: 5e-6, ry: 5e-6 };
        let w = 100e-6;
        let avg = transverse_average_eta(&m, 15.0 * MHZ, 230.0 * NS, &p, w);
        let area = 1.0 - (-2.0 * (p.rx / w).powi(2)).exp();
        assert!(avg > 0.0 && avg < area * 1.0);
    }

    #[test]
    fn average_routes_agree() {
        let m = EfficiencyModel::new(gamma(), 94.0 * NS, 0.0);
        let p = reference_profile();
        for &(om, t0, w) in &[(15.0, 230.0, 8e-6), (8.0, 400.0, 8e-6), (30.0, 100.0, 20e-6), (15.0, 230.0, 3e-6)] {
            let a = transverse_average_eta(&m, om * MHZ, t0 * NS, &p, w);
            let b = transverse_average_cartesian(|d| m.eta(om * MHZ, t0 * NS, d), &p, w);
            assert!(rel(a, b) < 1e-4, "{om} {t0} {w}: {a} vs {b}");
        }
    }

    #[test]
    fn optimizer_scaling_and_degenerate() {
        let m = EfficiencyModel::new(gamma(), 94.0 * NS, 0.0);
        let d = 127.0;
        let mut b = OptimizeBounds::standard(&m, d);
        b.n_omega = 60;
        b.n_t0 = 60;
        let o1 = optimize_eta(|om, t0| m.eta(om, t0, d), &b).unwrap();
        let m2 = m.rescaled(2.0);
        let mut b2 = OptimizeBounds::standard(&m2, d);
        b2.n_omega = 60;
        b2.n_t0 = 60;
        b2.omega_min /= SQRT_2;
        b2.omega_max /= SQRT_2;
        b2.t0_max = 2.0 * b.t0_max;
        assert!(rel(b2.t0_span(b2.omega_min), 2.0 * b.t0_span(b.omega_min)) < 1e-12);
        let o2 = optimize_eta(|om, t0| m2.eta(om, t0, d), &b2).unwrap();
        assert!(!o1.on_boundary && !o2.on_boundary);
        assert!(rel(o2.eta, o1.eta) < 1e-4);
        assert!(rel(o2.omega_c, o1.omega_c / SQRT_2) < 1e-2);
        assert!(rel(o2.t0, 2.0 * o1.t0) < 1e-2);
        assert!(o1.eta >= o1.grid_best.2);

        let mut fixed = b;
        fixed.omega_min = 15.0 * MHZ;
        fixed.omega_max = 15.0 * MHZ;
        let o3 = optimize_eta(|om, t0| m.eta(om, t0, d), &fixed).unwrap();
        assert_eq!(o3.omega_c, 15.0 * MHZ);
        let (_, best) = brent_maximize(|t| m.eta(15.0 * MHZ, t, d), 0.0, 1e-6, 1e-12, 500);
        assert!(rel(o3.eta, best) < 1e-8);
    }

    #[test]
    fn optimizer_flags_boundary() {
        // monotone objective: maximum sits at the upper Ω_c edge
        let b = OptimizeBounds { omega_min: 1.0, omega_max: 10.0, t0_min: 0.0, t0_max: 1.0, reach: None, n_omega: 20, n_t0: 20 };
        let o = optimize_eta(|om, t| om - (t - 0.5).powi(2), &b).unwrap();
        assert!(o.on_boundary);
        assert!(rel(o.omega_c, 10.0) < 1e-6);
    }

    #[test]
    fn optimizer_is_deterministic() {
        let m = EfficiencyModel::new(gamma(), 94.0 * NS, 0.0);
        let mut b = OptimizeBounds::standard(&m, 127.0);
        b.n_omega = 40;
        b.n_t0 = 40;
        let a = optimize_eta(|om, t0| m.eta(om, t0, 127.0), &b).unwrap();
        let c = optimize_eta(|om, t0| m.eta(om, t0, 127.0), &b).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn recoil_time() {
        let c = AtomicConstants::rubidium87_d1();
        let s = recoil_sigma_eta(&c, 8e-6, 795e-9).unwrap();
        assert!((s - 0.97949e-3).abs() < 1e-7, "{s}");
        assert!(rel(recoil_sigma_eta(&c, 16e-6, 795e-9).unwrap(), 2.0 * s) < 1e-14);
        assert!(rel(recoil_sigma_eta(&c, 8e-6, 1590e-9).unwrap(), 2.0 * s) < 1e-14);
        // with the rounded mass value 1.4447e-25 kg
        let rounded = AtomicConstants { mass: 1.4447e-25, ..c };
        assert!((recoil_sigma_eta(&rounded, 8e-6, 795e-9).unwrap() - 0.98e-3).abs() < 5e-6);
    }

    #[test]
    fn decay_examples() {
        assert_eq!(eta_decay(0.0, 0.3, 1e-3).unwrap(), 0.3);
        assert!((eta_decay(1e-3, 0.3, 1e-3).unwrap() - 0.3 * (-0.5f64).exp()).abs() < 1e-15);
        assert!(eta_decay(0.0, 0.3, 0.0).is_err());
    }

    #[test]
    fn thermal_time() {
        let c = AtomicConstants::rubidium87_d1();
        let g = BeamGeometry::perpendicular(795e-9, 795e-9);
        let k = 2.0 * PI / 795e-9;
        assert!(rel(g.differential_wavevector(), SQRT_2 * k) < 1e-14);
        let lam = thermal_de_broglie_wavelength(1e-6, &c).unwrap();
        assert!((lam - 0.18727e-6).abs() < 1e-10, "{lam}");
        let t1 = thermal_decay_time(1e-6, &c, &g).unwrap();
        assert!((t1 - 22.93e-6).abs() < 0.02e-6, "{t1}");
        let v = c.hbar * g.differential_wavevector() / c.mass;
        assert!((v - 8.1675e-3).abs() < 1e-6);
        let t4 = thermal_decay_time(4e-6, &c, &g).unwrap();
        assert!(rel(t4, 0.5 * t1) < 1e-14);
        assert!(thermal_decay_time(0.0, &c, &g).is_err());
        assert!(thermal_decay_time(-1.0, &c, &g).is_err());
    }

    #[test]
    fn bimodal_examples() {
        let s = 1e-3;
        let th = 23e-6;
        for t in [0.0, 1e-4, 1e-3] {
            assert_eq!(bimodal_eta(t, 1.0, s, th).unwrap(), (-t * t / (2.0 * s * s)).exp());
        }
        assert!(bimodal_eta(1e-3, 0.0, s, th).unwrap() < 1e-300);
        let plateau = bimodal_eta(200e-6, 0.3, 1.0, th).unwrap();
        assert!((plateau - 0.3).abs() < 1e-6);
        assert!(bimodal_eta(0.0, 1.5, s, th).is_err());
    }

    proptest! {
        #[test]
        fn bimodal_starts_at_one_and_decreases(fc in 0.0..=1.0f64, s in 1e-5..1e-2f64, th in 1e-6..1e-3f64, t in 0.0..5e-3f64, dt in 0.0..1e-3f64) {
            prop_assert!((bimodal_eta(0.0, fc, s, th).unwrap() - 1.0).abs() < 1e-15);
            prop_assert!(bimodal_eta(t + dt, fc, s, th).unwrap() <= bimodal_eta(t, fc, s, th).unwrap());
        }

        #[test]
        fn efficiencies_in_unit_interval(om in 0.1..200.0f64, t0 in -1e-6..2e-6f64, d in 0.0..1000.0f64, tp in 1e-9..1e-6f64) {
            let m = EfficiencyModel::new(gamma(), tp, 1e-4);
            let r = m.eta_total(om * MHZ, t0, d);
            prop_assert!((0.0..=1.0).contains(&r.eta_comp));
            prop_assert!((0.0..=1.0).contains(&r.eta_trans));
            prop_assert!((0.0..=1.0).contains(&r.eta_total));
        }
    }
}
