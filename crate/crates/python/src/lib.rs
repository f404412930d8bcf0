//! Python bindings for `bec_memory`.

use bec_memory::config::{Config, RunConfig};
use bec_memory::constants::AtomicConstants;
use bec_memory::efficiency::{self, transverse_average_eta};
use bec_memory::eit_optics::{self as eit, ControlField, DepthProfile, MediumParams};
use bec_memory::fitting::{self, DataSeries, FitResult};
use bec_memory::memory_model::{self as mm, MuellerMatrix};
use bec_memory::polarization::{self as pol, PoincareVector};
use bec_memory::tomography::{self as tomo, TomographyRecord};
use bec_memory::{figures, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::collections::BTreeMap;

fn err(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Config(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

type Matrix = [[f64; 4]; 4];

#[pyclass(name = "StokesVector", frozen)]
struct PyStokes(pol::StokesVector);

#[pymethods]
impl PyStokes {
    #[new]
    fn new(s0: f64, s1: f64, s2: f64, s3: f64) -> PyResult<Self> {
        pol::StokesVector::new(s0, s1, s2, s3).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_intensities(i_h: f64, i_v: f64, i_d: f64, i_a: f64, i_r: f64, i_l: f64) -> PyResult<Self> {
        pol::stokes_from_intensities(i_h, i_v, i_d, i_a, i_r, i_l).map(Self).map_err(err)
    }

    fn as_tuple(&self) -> (f64, f64, f64, f64) {
        let [a, b, c, d] = self.0.as_array();
        (a, b, c, d)
    }

    fn degree_of_polarization(&self) -> f64 {
        self.0.degree_of_polarization()
    }

    fn poincare(&self) -> PyResult<(f64, f64, f64)> {
        let [a, b, c] = self.0.poincare().map_err(err)?.as_array();
        Ok((a, b, c))
    }

    fn __repr__(&self) -> String {
        let [a, b, c, d] = self.0.as_array();
        format!("StokesVector({a}, {b}, {c}, {d})")
    }
}

#[pyclass(name = "MemoryParams", frozen, get_all)]
struct PyMemoryParams {
    eta: f64,
    alpha: f64,
    phi: f64,
}

#[pymethods]
impl PyMemoryParams {
    #[new]
    fn new(eta: f64, alpha: f64, phi: f64) -> PyResult<Self> {
        let p = mm::MemoryParams::new(eta, alpha, phi).map_err(err)?;
        Ok(Self { eta: p.eta, alpha: p.alpha, phi: p.phi })
    }

    /// Mueller matrix as nested rows.
    fn mueller(&self) -> PyResult<Matrix> {
        let p = mm::MemoryParams::new(self.eta, self.alpha, self.phi).map_err(err)?;
        Ok(mm::memory_mueller(&p).m)
    }

    fn average_fidelity(&self) -> PyResult<f64> {
        mm::average_process_fidelity(self.alpha).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("MemoryParams(eta={}, alpha={}, phi={})", self.eta, self.alpha, self.phi)
    }
}

#[pyclass(name = "EfficiencyModel", frozen)]
struct PyEfficiencyModel(efficiency::EfficiencyModel);

#[pymethods]
impl PyEfficiencyModel {
    /// SI units: `gamma` in 1/s, `tau_p` in s, `length` in m.
    #[new]
    #[pyo3(signature = (gamma, tau_p, length, broadened_width = false))]
    fn new(gamma: f64, tau_p: f64, length: f64, broadened_width: bool) -> Self {
        let mut m = efficiency::EfficiencyModel::new(gamma, tau_p, length);
        m.broadened_width = broadened_width;
        Self(m)
    }

    /// Returns `(eta_comp, eta_trans, eta_total)`.
    fn eta_total(&self, omega_c: f64, t0: f64, d_p: f64) -> (f64, f64, f64) {
        let r = self.0.eta_total(omega_c, t0, d_p);
        (r.eta_comp, r.eta_trans, r.eta_total)
    }

    /// Average over a Gaussian beam of `waist` crossing the reference condensate
    /// scaled to `peak_depth`.
    fn transverse_average(&self, omega_c: f64, t0: f64, peak_depth: f64, waist: f64) -> f64 {
        let profile = DepthProfile::from_medium(&MediumParams::reference()).with_peak(peak_depth);
        transverse_average_eta(&self.0, omega_c, t0, &profile, waist)
    }
}

#[pyfunction]
fn fidelity(u_in: (f64, f64, f64), u_out: (f64, f64, f64)) -> PyResult<f64> {
    let a = PoincareVector::new(u_in.0, u_in.1, u_in.2).map_err(err)?;
    let b = PoincareVector::new(u_out.0, u_out.1, u_out.2).map_err(err)?;
    pol::fidelity(&a, &b).map_err(err)
}

/// Angular Faraday frequency in rad/s for a field in gauss.
#[pyfunction]
fn faraday_frequency(bz_gauss: f64) -> f64 {
    mm::faraday_frequency(bz_gauss, &AtomicConstants::rubidium87_d1())
}

/// Dephasing time in seconds for a field noise in gauss.
#[pyfunction]
fn sigma_alpha_from_noise(sigma_b_gauss: f64) -> PyResult<f64> {
    mm::sigma_alpha_from_noise(sigma_b_gauss, &AtomicConstants::rubidium87_d1()).map_err(err)
}

#[pyfunction]
fn damping_factor(t_store: f64, sigma_alpha: f64) -> PyResult<f64> {
    mm::damping_factor(t_store, sigma_alpha).map_err(err)
}

#[pyfunction]
fn average_process_fidelity(alpha: f64) -> PyResult<f64> {
    mm::average_process_fidelity(alpha).map_err(err)
}

#[pyfunction]
fn chi0(omega_c: f64) -> f64 {
    let m = MediumParams::reference();
    eit::chi0(omega_c, &m, m.peak_density())
}

#[pyfunction]
fn pulse_delay(omega_c: f64, d_p: f64, gamma: f64) -> f64 {
    eit::pulse_delay(omega_c, d_p, gamma)
}

#[pyfunction]
fn transparency_width(omega_c: f64, gamma: f64, d_p: f64) -> PyResult<f64> {
    eit::transparency_width(omega_c, gamma, d_p).map_err(err)
}

/// Two-photon detunings (rad/s) of the absorption maxima.
#[pyfunction]
fn im_chi_maxima(omega_c: f64, delta_c: f64) -> PyResult<(f64, f64)> {
    Ok(eit::im_chi_maxima(&ControlField::new(omega_c, delta_c).map_err(err)?))
}

/// Reconstruct the Mueller matrix from output Stokes vectors for the
/// canonical inputs H, D, R, L.
#[pyfunction]
fn process_tomography(outputs: Matrix) -> PyResult<Matrix> {
    let rec = TomographyRecord { inputs: TomographyRecord::CANONICAL_INPUTS, outputs };
    Ok(tomo::process_tomography(&rec).map_err(err)?.matrix.m)
}

/// Returns `(eta, alpha, phi, residual)`.
#[pyfunction]
fn extract_memory_params(matrix: Matrix) -> PyResult<(f64, f64, f64, f64)> {
    let ex = tomo::extract_memory_params(&MuellerMatrix::new(matrix)).map_err(err)?;
    Ok((ex.params.eta, ex.params.alpha, ex.params.phi, ex.residual))
}

fn fit_dict<'py>(py: Python<'py>, r: &FitResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (i, name) in r.names.iter().enumerate() {
        d.set_item(*name, r.params[i])?;
        if let Some(se) = &r.std_errors {
            d.set_item(format!("{name}_err"), se[i])?;
        }
    }
    d.set_item("chi2_per_dof", r.chi2_per_dof)?;
    d.set_item("converged", r.converged)?;
    Ok(d)
}

fn series(x: Vec<f64>, y: Vec<f64>, sigma: Option<Vec<f64>>) -> PyResult<DataSeries> {
    DataSeries::new(x, y, sigma).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (x, y, sigma = None))]
fn fit_damped_sinusoid<'py>(py: Python<'py>, x: Vec<f64>, y: Vec<f64>, sigma: Option<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
    let r = fitting::fit_damped_sinusoid(&series(x, y, sigma)?, None).map_err(err)?;
    fit_dict(py, &r)
}

#[pyfunction]
#[pyo3(signature = (x, y, sigma = None))]
fn fit_gaussian_decay<'py>(py: Python<'py>, x: Vec<f64>, y: Vec<f64>, sigma: Option<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
    let r = fitting::fit_gaussian_decay(&series(x, y, sigma)?).map_err(err)?;
    fit_dict(py, &r)
}

/// Run a CLI subcommand and return its CSV text. `overrides` maps
/// configuration keys to values, as `--set` does.
#[pyfunction]
#[pyo3(signature = (command, overrides = None))]
fn run_figure(py: Python<'_>, command: &str, overrides: Option<BTreeMap<String, String>>) -> PyResult<String> {
    let mut raw = Config::default();
    for (k, v) in overrides.unwrap_or_default() {
        raw.set(&k, &v).map_err(err)?;
    }
    let cfg = RunConfig::from_config(raw).map_err(err)?;
    let command = command.to_string();
    py.detach(move || figures::run(&command, &cfg)).map(|t| t.to_csv()).map_err(err)
}

#[pymodule]
fn bec_memory_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStokes>()?;
    m.add_class::<PyMemoryParams>()?;
    m.add_class::<PyEfficiencyModel>()?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(faraday_frequency, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_alpha_from_noise, m)?)?;
    m.add_function(wrap_pyfunction!(damping_factor, m)?)?;
    m.add_function(wrap_pyfunction!(average_process_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(chi0, m)?)?;
    m.add_function(wrap_pyfunction!(pulse_delay, m)?)?;
    m.add_function(wrap_pyfunction!(transparency_width, m)?)?;
    m.add_function(wrap_pyfunction!(im_chi_maxima, m)?)?;
    m.add_function(wrap_pyfunction!(process_tomography, m)?)?;
    m.add_function(wrap_pyfunction!(extract_memory_params, m)?)?;
    m.add_function(wrap_pyfunction!(fit_damped_sinusoid, m)?)?;
    m.add_function(wrap_pyfunction!(fit_gaussian_decay, m)?)?;
    m.add_function(wrap_pyfunction!(run_figure, m)?)?;
    Ok(())
}
