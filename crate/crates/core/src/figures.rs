//! Tables behind each CLI subcommand: simulated traces, model curves and
//! fits, written as CSV with a `#` metadata preamble.

use crate::config::RunConfig;
use crate::efficiency::{
    bimodal_eta, eta_decay, optimize_eta, recoil_sigma_eta, thermal_decay_time, transverse_average_eta, BeamGeometry,
    OptimizeBounds,
};
use crate::eit_optics::{
    check_compression_condition, chi0, im_chi_maxima, pulse_delay, susceptibility, susceptibility_approx, transparency_width,
    ControlField,
};
use crate::error::{Error, Result};
use crate::fitting::{fit_damped_sinusoid, fit_gaussian_decay, DataSeries};
use crate::memory_model::{
    average_process_fidelity, ensemble_mueller, faraday_frequency, rotation_angle, s1_trace, sigma_alpha_from_noise,
    NoiseModel, NoisePreset, ShotSampler,
};
use crate::polarization::PoincareVector;
use crate::tomography::{extract_memory_params, process_tomography, synthesize_record, DetectorNoise, TomographyRecord};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt::Write as _;

const MHZ: f64 = 2.0 * PI * 1e6;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

/// Output table: metadata lines, a header naming columns with units, rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(meta: Vec<String>, header: &[&str]) -> Self {
        Self { meta, header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|v| Cell::Num(*v)).collect());
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for m in &self.meta {
            let _ = writeln!(s, "# {m}");
        }
        let _ = writeln!(s, "{}", self.header.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => format!("{v:.16e}"),
                    Cell::Text(t) => t.clone(),
                })
                .collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    /// Numeric column by header name.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        self.rows
            .iter()
            .map(|r| match &r[i] {
                Cell::Num(v) => Some(*v),
                Cell::Text(_) => None,
            })
            .collect()
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Storage times of the segmented trace (s).
pub fn fig3_grid(cfg: &RunConfig) -> Result<Vec<f64>> {
    let starts = cfg.raw.get_list("fig3.segment_starts_us")?;
    let len = cfg.raw.get_f64("fig3.segment_length_us")?;
    let step = cfg.raw.get_f64("fig3.step_us")?;
    if !(step > 0.0) || len < 0.0 || starts.iter().any(|s| *s < 0.0) {
        return Err(config_error("fig3 grid needs a positive step and non-negative segments"));
    }
    let n = (len / step + 1e-9).floor() as usize;
    let mut t = Vec::new();
    for s in starts {
        for k in 0..=n {
            t.push((s + step * k as f64) * 1e-6);
        }
    }
    t.sort_by(f64::total_cmp);
    t.dedup();
    Ok(t)
}

/// Normalized S₁ after storage of H light: single shots and the ensemble model.
pub fn fig3(cfg: &RunConfig) -> Result<Table> {
    let times = fig3_grid(cfg)?;
    let tau_d = cfg.storage_delay();
    let sigma_alpha = sigma_alpha_from_noise(cfg.noise.sigma_b, &cfg.consts)?;
    let omega_f = faraday_frequency(cfg.noise.mean_bz, &cfg.consts);
    let mut sampler = ShotSampler::new(cfg.seed);
    let mut shots = Vec::with_capacity(times.len());
    for &t in &times {
        let s = sampler.shot(&PoincareVector::H, t, tau_d, cfg.eta_store, &cfg.noise, &cfg.consts)?;
        shots.push(s.s1 / s.s0);
    }
    let mut meta = cfg.metadata("fig3");
    meta.push(format!("sigma_alpha_model_ms = {:.16e}", sigma_alpha * 1e3));
    meta.push(format!("omega_f_model_mhz = {:.16e}", omega_f / MHZ));
    if cfg.noise.sigma_b > 0.0 {
        match fit_damped_sinusoid(&DataSeries::new(times.clone(), shots.clone(), None)?, None) {
            Ok(f) => {
                let se = |n: &str| f.std_error(n).unwrap_or(f64::NAN);
                meta.push(format!("fit sigma_alpha_ms = {:.16e} +- {:.16e}", f.params[0] * 1e3, se("sigma_alpha") * 1e3));
                meta.push(format!("fit omega_f_mhz = {:.16e} +- {:.16e}", f.params[1] / MHZ, se("omega_f") / MHZ));
                meta.push(format!("fit phi0_rad = {:.16e} +- {:.16e}", f.params[2], se("phi0")));
                meta.push(format!("fit amplitude = {:.16e} +- {:.16e}", f.params[3], se("amplitude")));
                meta.push(format!("fit converged = {}", f.converged));
            }
            Err(e) => meta.push(format!("fit failed: {e}")),
        }
    }
    let mut table = Table::new(meta, &["t_store_us", "s1_over_s0_shot", "s1_over_s0_model"]);
    for (&t, &shot) in times.iter().zip(&shots) {
        let phi = rotation_angle(t, tau_d, omega_f);
        table.push_nums(&[t * 1e6, shot, s1_trace(t + tau_d, sigma_alpha, phi, 0.0)]);
    }
    Ok(table)
}

/// Process tomography of the shot-averaged memory: `shots` realizations per
/// input state, then detector noise on the 12 readings.
pub fn simulate_tomography<R: rand::Rng>(
    cfg: &RunConfig,
    noise: &NoiseModel,
    t_store: f64,
    shots: usize,
    detector: &DetectorNoise,
    sampler: &mut ShotSampler,
    rng: &mut R,
) -> Result<TomographyRecord> {
    let tau_d = cfg.storage_delay();
    synthesize_record(
        TomographyRecord::CANONICAL_INPUTS,
        |s_in| {
            let u = s_in.poincare()?;
            let mut acc = [0.0; 4];
            for _ in 0..shots {
                let s = sampler.shot(&u, t_store, tau_d, cfg.eta_store, noise, &cfg.consts)?;
                for (a, v) in acc.iter_mut().zip(s.as_array()) {
                    *a += v;
                }
            }
            Ok(acc.map(|a| a / shots as f64))
        },
        detector,
        rng,
    )
}

/// Damping factor versus storage time for the three measured noise presets.
pub fn fig4(cfg: &RunConfig) -> Result<Table> {
    let points = cfg.raw.get_usize("fig4.points")?;
    let span = cfg.raw.get_f64("fig4.span_sigmas")?;
    let shots = cfg.raw.get_usize("fig4.shots")?;
    if points < 3 || shots == 0 || !(span > 0.0) {
        return Err(config_error("fig4 needs at least 3 points, 1 shot and a positive span"));
    }
    let mut sampler = ShotSampler::new(cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut meta = cfg.metadata("fig4");
    let mut rows = Vec::new();
    for preset in NoisePreset::MEASURED {
        let noise = NoiseModel::from_preset(preset, cfg.noise.mean_bz)?;
        let sigma_alpha = sigma_alpha_from_noise(noise.sigma_b, &cfg.consts)?;
        let times = linspace(0.0, span * sigma_alpha, points);
        let mut alphas = Vec::with_capacity(points);
        for &t in &times {
            let rec = simulate_tomography(cfg, &noise, t, shots, &cfg.detector, &mut sampler, &mut rng)?;
            let m = process_tomography(&rec)?;
            alphas.push(extract_memory_params(&m.matrix)?.params.alpha);
        }
        let fit = fit_gaussian_decay(&DataSeries::new(times.clone(), alphas.clone(), None)?);
        let (fa, fs) = match &fit {
            Ok(f) => {
                meta.push(format!(
                    "fit {} sigma_alpha_ms = {:.16e} +- {:.16e} amplitude = {:.16e}",
                    preset.name(),
                    f.params[1] * 1e3,
                    f.std_error("sigma").unwrap_or(f64::NAN) * 1e3,
                    f.params[0]
                ));
                (f.params[0], f.params[1])
            }
            Err(e) => {
                meta.push(format!("fit {} failed: {e}", preset.name()));
                (f64::NAN, f64::NAN)
            }
        };
        for (&t, &a) in times.iter().zip(&alphas) {
            let tt = t + cfg.storage_delay();
            let model = (-0.5 * (tt / sigma_alpha).powi(2)).exp();
            let fitted = fa * (-0.5 * (t / fs).powi(2)).exp();
            rows.push(vec![Cell::Text(preset.name().into()), (t * 1e6).into(), a.into(), model.into(), fitted.into()]);
        }
    }
    let mut table = Table::new(meta, &["preset", "t_store_us", "alpha_tomography", "alpha_model", "alpha_fit"]);
    for r in rows {
        table.push(r);
    }
    Ok(table)
}

/// Gaussian decay of the efficiency of a pure condensate.
pub fn fig5(cfg: &RunConfig) -> Result<Table> {
    let t_max = cfg.raw.get_f64("fig5.t_max_ms")? * 1e-3;
    let points = cfg.raw.get_usize("fig5.points")?;
    let eta0 = cfg.raw.get_f64("fig5.eta0")?;
    let sigma_fit = cfg.raw.get_f64("fig5.sigma_eta_ms")? * 1e-3;
    let sigma_recoil = recoil_sigma_eta(&cfg.consts, cfg.pulse.waist, cfg.lambda_c)?;
    let mut meta = cfg.metadata("fig5");
    meta.push(format!("sigma_eta_recoil_ms = {:.16e}", sigma_recoil * 1e3));
    meta.push(format!("attenuation = {:.16e}", cfg.attenuation));
    let mut table = Table::new(meta, &["t_store_us", "eta_recoil_model", "eta_fit_line"]);
    for t in linspace(0.0, t_max, points) {
        let a = eta_decay(t, eta0, sigma_recoil)? * cfg.attenuation;
        let b = eta_decay(t, eta0, sigma_fit)? * cfg.attenuation;
        table.push_nums(&[t * 1e6, a, b]);
    }
    Ok(table)
}

/// Normalized efficiency of partly condensed clouds for several condensate fractions.
pub fn fig6(cfg: &RunConfig) -> Result<Table> {
    let fractions = cfg.raw.get_list("fig6.condensate_fractions")?;
    let temperature = cfg.raw.get_f64("fig6.temperature_uk")? * 1e-6;
    let t_max = cfg.raw.get_f64("fig6.t_max_us")? * 1e-6;
    let points = cfg.raw.get_usize("fig6.points")?;
    let sigma_bec = recoil_sigma_eta(&cfg.consts, cfg.pulse.waist, cfg.lambda_c)?;
    let geometry = BeamGeometry::perpendicular(cfg.medium.lambda_p, cfg.lambda_c);
    let thermal = thermal_decay_time(temperature, &cfg.consts, &geometry).map_err(|e| config_error(e.to_string()))?;
    let mut meta = cfg.metadata("fig6");
    meta.push(format!("sigma_bec_ms = {:.16e}", sigma_bec * 1e3));
    meta.push(format!("thermal_time_us = {:.16e}", thermal * 1e6));
    let names: Vec<String> = std::iter::once("t_store_us".to_string()).chain(fractions.iter().map(|f| format!("eta_fc_{f}"))).collect();
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut table = Table::new(meta, &header);
    for t in linspace(0.0, t_max, points) {
        let mut row = vec![t * 1e6];
        for &fc in &fractions {
            row.push(bimodal_eta(t, fc, sigma_bec, thermal).map_err(|e| config_error(e.to_string()))?);
        }
        table.push_nums(&row);
    }
    Ok(table)
}

/// Efficiency factors versus control Rabi frequency at fixed switch-off time.
pub fn fig7(cfg: &RunConfig) -> Result<Table> {
    let lo = cfg.raw.get_f64("fig7.omega_min_mhz")?;
    let hi = cfg.raw.get_f64("fig7.omega_max_mhz")?;
    let points = cfg.raw.get_usize("fig7.points")?;
    if !(lo > 0.0 && hi >= lo) || points == 0 {
        return Err(config_error("fig7 needs 0 < omega_min <= omega_max and at least one point"));
    }
    let model = cfg.efficiency_model();
    let t0 = cfg.pulse.t0;
    let d = cfg.profile.peak;
    let omegas = linspace(lo, hi, points);
    let rows: Vec<[f64; 5]> = omegas
        .par_iter()
        .map(|&om| {
            let w = om * MHZ;
            let r = model.eta_total(w, t0, d);
            let avg = transverse_average_eta(&model, w, t0, &cfg.profile, cfg.pulse.waist);
            let k = cfg.attenuation;
            [om, r.eta_comp, r.eta_trans, r.eta_total * k, avg * k]
        })
        .collect();
    let argmax = |i: usize| rows.iter().fold((f64::NEG_INFINITY, 0.0), |acc, r| if r[i] > acc.0 { (r[i], r[0]) } else { acc });
    let (pa, wa) = argmax(4);
    let (po, wo) = argmax(3);
    let mut meta = cfg.metadata("fig7");
    meta.push(format!("peak_depth = {:.16e}", d));
    meta.push(format!("averaged_peak = {pa:.16e} at omega_c_mhz = {wa:.16e}"));
    meta.push(format!("on_axis_peak = {po:.16e} at omega_c_mhz = {wo:.16e}"));
    let mut table = Table::new(meta, &["omega_c_mhz", "eta_comp", "eta_trans", "eta_on_axis", "eta_averaged"]);
    for r in rows {
        table.push_nums(&r);
    }
    Ok(table)
}

/// Susceptibility in units of χ₀, exact at each Δ_c and the small-δ₂ expansion.
pub fn fig8(cfg: &RunConfig) -> Result<Table> {
    let om = cfg.raw.get_f64("fig8.omega_c_mhz")? * MHZ;
    let dcs = cfg.raw.get_list("fig8.delta_c_mhz")?;
    let lo = cfg.raw.get_f64("fig8.delta_min_mhz")?;
    let hi = cfg.raw.get_f64("fig8.delta_max_mhz")?;
    let points = cfg.raw.get_usize("fig8.points")?;
    let gamma = cfg.medium.gamma;
    let fields: Vec<ControlField> = dcs.iter().map(|dc| ControlField::new(om, dc * MHZ)).collect::<Result<_>>().map_err(|e| config_error(e.to_string()))?;
    let mut meta = cfg.metadata("fig8");
    meta.push(format!("chi0 = {:.16e}", chi0(om, &cfg.medium, cfg.medium.peak_density())));
    meta.push(format!("omega_c_over_gamma = {:.16e}", om / gamma));
    for (f, dc) in fields.iter().zip(&dcs) {
        let (a, b) = im_chi_maxima(f);
        meta.push(format!("im_chi_maxima_mhz delta_c_mhz = {dc} : {:.16e}, {:.16e}", a / MHZ, b / MHZ));
    }
    let mut names = vec!["delta2_mhz".to_string()];
    for dc in &dcs {
        names.push(format!("re_chi_dc{dc}"));
        names.push(format!("im_chi_dc{dc}"));
    }
    names.push("re_chi_approx".into());
    names.push("im_chi_approx".into());
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut table = Table::new(meta, &header);
    for d in linspace(lo, hi, points) {
        let delta = d * MHZ;
        let mut row = vec![d];
        for f in &fields {
            let x = susceptibility(delta, f, 1.0, gamma);
            row.push(x.re);
            row.push(x.im);
        }
        let a = susceptibility_approx(delta, om, 1.0, gamma);
        row.push(a.re);
        row.push(a.im);
        table.push_nums(&row);
    }
    Ok(table)
}

/// Repeated synthetic process tomography at the configured storage time.
pub fn tomography(cfg: &RunConfig) -> Result<Table> {
    let reps = cfg.raw.get_usize("tomography.repetitions")?;
    let tau_d = cfg.storage_delay();
    let truth = ensemble_mueller(cfg.t_store, tau_d, cfg.eta_store, &cfg.noise, &cfg.consts)?;
    let channel = |s: &crate::polarization::StokesVector| Ok(truth.apply_raw(&s.as_array()));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let clean = synthesize_record(TomographyRecord::CANONICAL_INPUTS, channel, &DetectorNoise::NONE, &mut rng)?;
    let clean_ex = extract_memory_params(&process_tomography(&clean)?.matrix)?;
    let mut meta = cfg.metadata("tomography");
    meta.push(format!(
        "noiseless eta = {:.16e} alpha = {:.16e} phi_rad = {:.16e} fidelity = {:.16e}",
        clean_ex.params.eta,
        clean_ex.params.alpha,
        clean_ex.params.phi,
        average_process_fidelity(clean_ex.params.alpha)?
    ));
    let mut rows = Vec::with_capacity(reps);
    for i in 0..reps {
        let rec = synthesize_record(TomographyRecord::CANONICAL_INPUTS, channel, &cfg.detector, &mut rng)?;
        let est = process_tomography(&rec)?;
        let ex = extract_memory_params(&est.matrix)?;
        let f = average_process_fidelity(ex.params.alpha)?;
        rows.push([(i + 1) as f64, ex.params.eta, ex.params.alpha, ex.params.phi, f, ex.residual, est.condition_number]);
    }
    if reps > 0 {
        let n = reps as f64;
        let mean = rows.iter().map(|r| r[4]).sum::<f64>() / n;
        let var = if reps > 1 { rows.iter().map(|r| (r[4] - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        meta.push(format!("fidelity mean = {mean:.16e} std = {:.16e} std_error = {:.16e}", var.sqrt(), (var / n).sqrt()));
    }
    let mut table = Table::new(meta, &["repetition", "eta", "alpha", "phi_rad", "avg_fidelity", "residual", "condition_number"]);
    for r in rows {
        table.push_nums(&r);
    }
    Ok(table)
}

/// Grid search and refinement of the efficiency over (Ω_c, t₀).
pub fn optimize(cfg: &RunConfig) -> Result<Table> {
    let model = cfg.efficiency_model();
    let d = cfg.profile.peak;
    let averaged = cfg.raw.get_bool("optimize.averaged")?;
    let mut bounds = OptimizeBounds::standard(&model, d);
    bounds.omega_min = cfg.raw.get_f64("optimize.omega_min_mhz")? * MHZ;
    bounds.omega_max = cfg.raw.get_f64("optimize.omega_max_mhz")? * MHZ;
    bounds.n_omega = cfg.raw.get_usize("optimize.n_omega")?;
    bounds.n_t0 = cfg.raw.get_usize("optimize.n_t0")?;
    if let Some(r) = bounds.reach {
        bounds.t0_max = r.at(bounds.omega_min.min(bounds.omega_max));
    }
    let opt = if averaged {
        optimize_eta(|om, t0| transverse_average_eta(&model, om, t0, &cfg.profile, cfg.pulse.waist), &bounds)?
    } else {
        optimize_eta(|om, t0| model.eta(om, t0, d), &bounds)?
    };
    let tau_d = pulse_delay(opt.omega_c, d, model.gamma);
    let diag = check_compression_condition(tau_d, model.tau_p, d);
    let on_axis = model.eta_total(opt.omega_c, opt.t0, d);
    let mut meta = cfg.metadata("optimize");
    meta.push(format!("objective = {}", if averaged { "transverse average" } else { "on axis" }));
    let mut table = Table::new(
        meta,
        &[
            "omega_c_mhz",
            "t0_ns",
            "eta",
            "on_boundary",
            "grid_omega_c_mhz",
            "grid_t0_ns",
            "grid_eta",
            "tau_d_ns",
            "delta_omega_trans_mhz",
            "eta_comp_on_axis",
            "eta_trans_on_axis",
            "delay_ratio",
            "sqrt_depth",
        ],
    );
    table.push_nums(&[
        opt.omega_c / MHZ,
        opt.t0 * 1e9,
        opt.eta * cfg.attenuation,
        if opt.on_boundary { 1.0 } else { 0.0 },
        opt.grid_best.0 / MHZ,
        opt.grid_best.1 * 1e9,
        opt.grid_best.2 * cfg.attenuation,
        tau_d * 1e9,
        transparency_width(opt.omega_c, model.gamma, d)? / MHZ,
        on_axis.eta_comp,
        on_axis.eta_trans,
        diag.delay_ratio,
        diag.sqrt_depth,
    ]);
    Ok(table)
}

/// Subcommand dispatch by name.
pub fn run(command: &str, cfg: &RunConfig) -> Result<Table> {
    match command {
        "fig3" => fig3(cfg),
        "fig4" => fig4(cfg),
        "fig5" => fig5(cfg),
        "fig6" => fig6(cfg),
        "fig7" => fig7(cfg),
        "fig8" => fig8(cfg),
        "tomography" => tomography(cfg),
        "optimize" => optimize(cfg),
        other => Err(config_error(format!("unknown command '{other}'"))),
    }
}
