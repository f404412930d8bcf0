//! Flat `key = value` run configuration. Keys are namespaced by component and
//! carry their unit as a suffix (`_ns`, `_us`, `_mhz`, `_mg`, ...).

use crate::constants::{AtomicConstants, BOLTZMANN, HBAR, RB87_MASS, SPEED_OF_LIGHT};
use crate::efficiency::{EfficiencyModel, PulseParams};
use crate::eit_optics::{pulse_delay, ControlField, DepthProfile, MediumParams};
use crate::error::{Error, Result};
use crate::memory_model::{NoiseModel, NoisePreset};
use crate::tomography::DetectorNoise;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

/// Every accepted key with its default value.
pub const DEFAULTS: &[(&str, &str)] = &[
    ("seed", "1"),
    ("medium.atom_number", "1.2e6"),
    ("medium.rx_um", "7"),
    ("medium.ry_um", "25"),
    ("medium.rz_um", "25"),
    ("medium.gamma_inv_ns", "26"),
    ("medium.branching_ratio", "1/12"),
    ("medium.lambda_p_nm", "795"),
    // "auto" uses the Thomas-Fermi value
    ("medium.peak_depth", "127"),
    ("pulse.tau_p_ns", "94"),
    ("pulse.t0_ns", "230"),
    ("pulse.waist_um", "8"),
    ("pulse.broadened_width", "false"),
    ("control.omega_c_mhz", "15"),
    ("control.delta_c_mhz", "0"),
    ("control.lambda_c_nm", "795"),
    ("noise.preset", "line-synced"),
    ("noise.mean_bz_g", "0.14"),
    // empty: taken from the preset
    ("noise.sigma_b_mg", ""),
    ("constants.g_f", "0.5"),
    ("constants.delta_mf", "2"),
    ("constants.mu_b_mhz_per_g", "1.40"),
    ("constants.mass_kg", ""),
    ("storage.t_store_us", "1"),
    ("storage.include_tau_d", "true"),
    ("storage.eta", "1"),
    ("detector.relative_sigma", "0.02"),
    ("detector.background", "0"),
    ("attenuation.enabled", "false"),
    ("attenuation.fiber", "0.66"),
    ("attenuation.mode_a", "0.88"),
    ("attenuation.mode_b", "0.80"),
    ("attenuation.cavity", "0.8"),
    ("fig3.segment_starts_us", "0,200,500,1000,1500,2000"),
    ("fig3.segment_length_us", "20"),
    ("fig3.step_us", "0.5"),
    ("fig4.points", "16"),
    ("fig4.span_sigmas", "3"),
    ("fig4.shots", "200"),
    ("fig5.t_max_ms", "2"),
    ("fig5.points", "81"),
    ("fig5.eta0", "1"),
    ("fig5.sigma_eta_ms", "0.48"),
    ("fig6.condensate_fractions", "0.3,0.6,0.9"),
    ("fig6.temperature_uk", "1"),
    ("fig6.t_max_us", "300"),
    ("fig6.points", "301"),
    ("fig7.omega_min_mhz", "1"),
    ("fig7.omega_max_mhz", "40"),
    ("fig7.points", "391"),
    ("fig8.omega_c_mhz", "20"),
    ("fig8.delta_c_mhz", "0,70"),
    ("fig8.delta_min_mhz", "-100"),
    ("fig8.delta_max_mhz", "30"),
    ("fig8.points", "2601"),
    ("tomography.repetitions", "1000"),
    ("optimize.averaged", "true"),
    ("optimize.omega_min_mhz", "1"),
    ("optimize.omega_max_mhz", "100"),
    ("optimize.n_omega", "200"),
    ("optimize.n_t0", "200"),
];

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

/// Raw key/value store, pre-filled with [`DEFAULTS`].
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Default for Config {
    fn default() -> Self {
        Self { values: DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect() }
    }
}

impl Config {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match self.values.get_mut(key) {
            Some(v) => {
                *v = value.trim().to_string();
                Ok(())
            }
            None => config_err(format!("unknown key '{key}'")),
        }
    }

    /// Apply a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        match pair.split_once('=') {
            Some((k, v)) => self.set(k, v),
            None => config_err(format!("override '{pair}' is not of the form key=value")),
        }
    }

    /// Apply the assignments in `text` on top of the current values.
    pub fn merge_str(&mut self, text: &str) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return config_err(format!("line {}: expected key = value", n + 1));
            };
            let k = k.trim();
            if !seen.insert(k.to_string()) {
                return config_err(format!("line {}: duplicate key '{k}'", n + 1));
            }
            self.set(k, v).map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut c = Self::default();
        c.merge_str(&text)?;
        Ok(c)
    }

    pub fn get_str(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("undeclared key {key}"))
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        parse_number(self.get_str(key)).ok_or_else(|| Error::Config(format!("{key}: '{}' is not a number", self.get_str(key))))
    }

    pub fn get_opt_f64(&self, key: &str) -> Result<Option<f64>> {
        if self.get_str(key).is_empty() { Ok(None) } else { self.get_f64(key).map(Some) }
    }

    pub fn get_usize(&self, key: &str) -> Result<usize> {
        self.get_str(key).parse().map_err(|_| Error::Config(format!("{key}: '{}' is not a non-negative integer", self.get_str(key))))
    }

    pub fn get_bool(&self, key: &str) -> Result<bool> {
        match self.get_str(key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            v => config_err(format!("{key}: '{v}' is not a boolean")),
        }
    }

    pub fn get_list(&self, key: &str) -> Result<Vec<f64>> {
        self.get_str(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse_number(s).ok_or_else(|| Error::Config(format!("{key}: '{s}' is not a number"))))
            .collect()
    }

    /// `key = value` lines in key order.
    pub fn echo(&self) -> Vec<String> {
        self.values.iter().map(|(k, v)| format!("{k} = {v}")).collect()
    }
}

/// Decimal number or a fraction `a/b`.
fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?,
        None => s.parse().ok()?,
    };
    v.is_finite().then_some(v)
}

/// Typed run parameters assembled from a [`Config`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub raw: Config,
    pub seed: u64,
    pub medium: MediumParams,
    pub profile: DepthProfile,
    pub pulse: PulseParams,
    pub broadened_width: bool,
    pub control: ControlField,
    pub lambda_c: f64,
    pub noise: NoiseModel,
    pub consts: AtomicConstants,
    pub t_store: f64,
    pub include_tau_d: bool,
    pub eta_store: f64,
    pub detector: DetectorNoise,
    /// Product of the transmission factors, 1 when disabled.
    pub attenuation: f64,
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 { Ok(v) } else { config_err(format!("{key} must be positive, got {v}")) }
}

impl RunConfig {
    pub fn from_config(raw: Config) -> Result<Self> {
        let c = &raw;
        let to_cfg = |e: Error| match e {
            Error::Config(m) => Error::Config(m),
            other => Error::Config(other.to_string()),
        };
        let seed: u64 = c.get_str("seed").parse().map_err(|_| Error::Config(format!("seed: '{}' is not an unsigned integer", c.get_str("seed"))))?;
        let um = 1e-6;
        let medium = MediumParams::new(
            c.get_f64("medium.atom_number")?,
            [c.get_f64("medium.rx_um")? * um, c.get_f64("medium.ry_um")? * um, c.get_f64("medium.rz_um")? * um],
            1.0 / (positive("medium.gamma_inv_ns", c.get_f64("medium.gamma_inv_ns")?)? * 1e-9),
            c.get_f64("medium.branching_ratio")?,
            c.get_f64("medium.lambda_p_nm")? * 1e-9,
        )
        .map_err(to_cfg)?;
        let tf = DepthProfile::from_medium(&medium);
        let profile = match c.get_str("medium.peak_depth") {
            "auto" => tf,
            _ => tf.with_peak(positive("medium.peak_depth", c.get_f64("medium.peak_depth")?)?),
        };
        let pulse = PulseParams::new(
            c.get_f64("pulse.tau_p_ns")? * 1e-9,
            c.get_f64("pulse.t0_ns")? * 1e-9,
            1.0,
            c.get_f64("pulse.waist_um")? * um,
        )
        .map_err(to_cfg)?;
        let mhz = 2.0 * PI * 1e6;
        let control = ControlField::new(c.get_f64("control.omega_c_mhz")? * mhz, c.get_f64("control.delta_c_mhz")? * mhz).map_err(to_cfg)?;
        let lambda_c = positive("control.lambda_c_nm", c.get_f64("control.lambda_c_nm")?)? * 1e-9;
        let preset: NoisePreset = c.get_str("noise.preset").parse()?;
        let mean_bz = c.get_f64("noise.mean_bz_g")?;
        let noise = match c.get_opt_f64("noise.sigma_b_mg")? {
            Some(s) => NoiseModel::new(mean_bz, s * 1e-3).map_err(to_cfg)?,
            None => NoiseModel::from_preset(preset, mean_bz)?,
        };
        let consts = AtomicConstants {
            g_f: c.get_f64("constants.g_f")?,
            delta_mf: c.get_f64("constants.delta_mf")?,
            mu_b_over_h: c.get_f64("constants.mu_b_mhz_per_g")? * 1e6,
            hbar: HBAR,
            mass: c.get_opt_f64("constants.mass_kg")?.unwrap_or(RB87_MASS),
            k_b: BOLTZMANN,
            c: SPEED_OF_LIGHT,
            lambda_p: medium.lambda_p,
        };
        consts.validate().map_err(to_cfg)?;
        let t_store = c.get_f64("storage.t_store_us")? * 1e-6;
        if t_store < 0.0 {
            return config_err("storage.t_store_us must be non-negative");
        }
        let eta_store = c.get_f64("storage.eta")?;
        if !(0.0..=1.0).contains(&eta_store) {
            return config_err("storage.eta must lie in [0, 1]");
        }
        let detector = DetectorNoise { relative_sigma: c.get_f64("detector.relative_sigma")?, background: c.get_f64("detector.background")? };
        if detector.relative_sigma < 0.0 || detector.background < 0.0 {
            return config_err("detector noise parameters must be non-negative");
        }
        let attenuation = if c.get_bool("attenuation.enabled")? {
            ["attenuation.fiber", "attenuation.mode_a", "attenuation.mode_b", "attenuation.cavity"]
                .iter()
                .map(|k| c.get_f64(k))
                .product::<Result<f64>>()?
        } else {
            1.0
        };
        Ok(Self {
            seed,
            medium,
            profile,
            pulse,
            broadened_width: c.get_bool("pulse.broadened_width")?,
            control,
            lambda_c,
            noise,
            consts,
            t_store,
            include_tau_d: c.get_bool("storage.include_tau_d")?,
            eta_store,
            detector,
            attenuation,
            raw,
        })
    }

    pub fn efficiency_model(&self) -> EfficiencyModel {
        EfficiencyModel {
            gamma: self.medium.gamma,
            tau_p: self.pulse.tau_p,
            length: 2.0 * self.medium.tf_radii[2],
            broadened_width: self.broadened_width,
        }
    }

    /// Slow-light delay at the configured control field, or zero when excluded.
    pub fn storage_delay(&self) -> f64 {
        if self.include_tau_d { pulse_delay(self.control.omega_c, self.profile.peak, self.medium.gamma) } else { 0.0 }
    }

    /// Metadata block written ahead of every output table.
    pub fn metadata(&self, command: &str) -> Vec<String> {
        let mut m = vec![
            format!("bec-memory {}", env!("CARGO_PKG_VERSION")),
            format!("command = {command}"),
            format!("seed = {}", self.seed),
        ];
        m.extend(self.raw.echo().into_iter().map(|l| format!("config {l}")));
        m
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::from_config(Config::default()).expect("defaults are valid")
    }
}

/// Text of a config file listing every key with its default.
pub fn default_config_text() -> String {
    let mut s = String::new();
    for (k, v) in DEFAULTS {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_build() {
        let r = RunConfig::default();
        assert_eq!(r.profile.peak, 127.0);
        assert!((r.medium.branching_ratio - 1.0 / 12.0).abs() < 1e-16);
        assert_eq!(r.noise.preset, NoisePreset::LineSynced);
        assert_eq!(r.attenuation, 1.0);
        assert!((r.pulse.tau_p - 94e-9).abs() < 1e-20);
    }

    #[test]
    fn file_round_trip() {
        let mut c = Config::default();
        c.merge_str(&default_config_text()).unwrap();
        assert_eq!(c, Config::default());
    }

    #[test]
    fn parse_comments_and_overrides() {
        let mut c = Config::default();
        c.merge_str("# header\n\npulse.tau_p_ns = 50 # shorter\nnoise.preset = feed_forward\n").unwrap();
        c.set_pair("medium.peak_depth=auto").unwrap();
        let r = RunConfig::from_config(c).unwrap();
        assert!((r.pulse.tau_p - 50e-9).abs() < 1e-20);
        assert_eq!(r.noise.preset, NoisePreset::FeedForward);
        assert!((r.profile.peak - 137.2233).abs() < 1e-3);
    }

    #[test]
    fn errors_are_config_errors() {
        let mut c = Config::default();
        assert!(matches!(c.set("medium.nope", "1"), Err(Error::Config(_))));
        assert!(matches!(c.merge_str("pulse.tau_p_ns 5"), Err(Error::Config(_))));
        assert!(matches!(c.merge_str("seed = 1\nseed = 2"), Err(Error::Config(_))));
        let mut bad = Config::default();
        bad.set("pulse.tau_p_ns", "-3").unwrap();
        assert!(matches!(RunConfig::from_config(bad), Err(Error::Config(_))));
        let mut bad = Config::default();
        bad.set("noise.preset", "loud").unwrap();
        assert!(matches!(RunConfig::from_config(bad), Err(Error::Config(_))));
        let mut bad = Config::default();
        bad.set("medium.rx_um", "abc").unwrap();
        assert!(matches!(RunConfig::from_config(bad), Err(Error::Config(_))));
    }

    #[test]
    fn attenuation_product() {
        let mut c = Config::default();
        c.set("attenuation.enabled", "true").unwrap();
        let r = RunConfig::from_config(c).unwrap();
        assert!((r.attenuation - 0.66 * 0.88 * 0.80 * 0.8).abs() < 1e-15);
    }

    #[test]
    fn explicit_noise_overrides_preset() {
        let mut c = Config::default();
        c.set("noise.sigma_b_mg", "0").unwrap();
        let r = RunConfig::from_config(c).unwrap();
        assert_eq!(r.noise.sigma_b, 0.0);
    }
}
