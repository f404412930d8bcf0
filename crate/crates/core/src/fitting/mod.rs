//! Least-squares extraction of memory figures of merit from measured or
//! synthetic series.

mod decay;
pub mod interp;
pub mod lm;
mod sinusoid;

pub use decay::{fit_gaussian_decay, fit_scaled_model};
pub use interp::MonotoneCubic;
pub use sinusoid::{fit_damped_sinusoid, fit_sinusoid, SinusoidGuess};

use crate::error::{domain, Result};

/// Points `(x, y)` with optional per-point standard deviations of `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSeries {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
}

impl DataSeries {
    pub fn new(x: Vec<f64>, y: Vec<f64>, sigma: Option<Vec<f64>>) -> Result<Self> {
        if x.len() != y.len() || sigma.as_ref().is_some_and(|s| s.len() != x.len()) {
            return domain("column lengths differ");
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return domain("non-finite data");
        }
        if let Some(s) = &sigma {
            if s.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return domain("standard deviations must be positive");
            }
        }
        Ok(Self { x, y, sigma })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.sigma.as_ref().map_or(1.0, |s| 1.0 / s[i])
    }

    /// Copy ordered by `(x, y)`, so results do not depend on input order.
    pub fn sorted(&self) -> Self {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.x[a].total_cmp(&self.x[b]).then(self.y[a].total_cmp(&self.y[b])));
        Self {
            x: idx.iter().map(|&i| self.x[i]).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            sigma: self.sigma.as_ref().map(|s| idx.iter().map(|&i| s[i]).collect()),
        }
    }

    fn subset(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            x: self.x[range.clone()].to_vec(),
            y: self.y[range.clone()].to_vec(),
            sigma: self.sigma.as_ref().map(|s| s[range].to_vec()),
        }
    }

    fn is_constant(&self) -> bool {
        let (lo, hi) = self.y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        hi - lo <= 1e-12 * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub names: Vec<&'static str>,
    pub params: Vec<f64>,
    /// One-sigma errors; present only for a converged fit with spare degrees of freedom.
    pub std_errors: Option<Vec<f64>>,
    pub chi2_per_dof: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| *n == name).map(|i| self.params[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| *n == name)?;
        self.std_errors.as_ref().map(|e| e[i])
    }
}

fn chi2_per_dof(out: &lm::LmOutcome) -> f64 {
    if out.dof == 0 { f64::NAN } else { out.cost / out.dof as f64 }
}

fn std_errors(out: &lm::LmOutcome) -> Option<Vec<f64>> {
    if !out.converged {
        return None;
    }
    out.covariance.as_ref().map(|c| (0..c.nrows()).map(|i| c[(i, i)].max(0.0).sqrt()).collect())
}
