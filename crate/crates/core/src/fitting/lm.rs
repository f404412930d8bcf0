//! Damped least squares (Levenberg-Marquardt with Marquardt diagonal scaling).

use super::DataSeries;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// A model `y = f(x; p)` with an analytic gradient in `p`.
pub trait Model {
    fn n_params(&self) -> usize;
    /// `None` when `p` lies outside the model's domain.
    fn value(&self, x: f64, p: &[f64]) -> Option<f64>;
    fn gradient(&self, x: f64, p: &[f64], g: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    /// Converged once every component of the Gauss-Newton step is below
    /// `step_tol·(|p_i| + step_tol)`, or once that step can no longer lower
    /// the cost above round-off.
    pub step_tol: f64,
    pub max_iter: usize,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { step_tol: 1e-8, max_iter: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    /// `s² (JᵀWJ)⁻¹` with `s² = cost/dof`; absent without spare degrees of freedom.
    pub covariance: Option<DMatrix<f64>>,
    /// Weighted residual sum of squares.
    pub cost: f64,
    pub dof: usize,
    pub converged: bool,
    pub iterations: usize,
}

fn cost<M: Model>(model: &M, data: &DataSeries, p: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..data.len() {
        match model.value(data.x[i], p) {
            Some(v) => {
                let r = (data.y[i] - v) * data.weight(i);
                s += r * r;
            }
            None => return f64::INFINITY,
        }
    }
    s
}

fn normal_equations<M: Model>(model: &M, data: &DataSeries, p: &[f64]) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
    let k = model.n_params();
    let n = data.len();
    let mut jac = DMatrix::zeros(n, k);
    let mut res = DVector::zeros(n);
    let mut g = vec![0.0; k];
    for i in 0..n {
        let w = data.weight(i);
        model.gradient(data.x[i], p, &mut g);
        for j in 0..k {
            jac[(i, j)] = g[j] * w;
        }
        res[i] = (data.y[i] - model.value(data.x[i], p).unwrap_or(f64::NAN)) * w;
    }
    let jtj = jac.transpose() * &jac;
    let jtr = jac.transpose() * res;
    (jac, jtj, jtr)
}

fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().cholesky().map(|c| c.solve(b))
}

fn jacobian_condition(jac: &DMatrix<f64>) -> f64 {
    let sv = jac.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if max == 0.0 { f64::INFINITY } else { max / min }
}

pub fn levenberg_marquardt<M: Model>(model: &M, data: &DataSeries, p0: &[f64], opts: LmOptions) -> Result<LmOutcome> {
    let k = model.n_params();
    let n = data.len();
    if p0.len() != k {
        return Err(Error::Domain(format!("expected {k} starting values, got {}", p0.len())));
    }
    if n < k {
        return Err(Error::NonIdentifiable(format!("{n} points for {k} parameters")));
    }
    let mut p = p0.to_vec();
    let mut c = cost(model, data, &p);
    if !c.is_finite() {
        return Err(Error::Domain("starting point outside the model domain".into()));
    }
    let (jac, mut jtj, mut jtr) = normal_equations(model, data, &p);
    let cond = jacobian_condition(&jac);
    if !(cond < 1e12) {
        return Err(Error::IllConditioned(cond));
    }
    let small = |d: &DVector<f64>, p: &[f64]| d.iter().zip(p).all(|(di, pi)| di.abs() <= opts.step_tol * (pi.abs() + opts.step_tol));
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    'outer: while iterations < opts.max_iter {
        iterations += 1;
        if let Some(gn) = solve(&jtj, &jtr) {
            // predicted decrease of the cost for the full Gauss-Newton step
            let predicted = gn.dot(&jtr);
            if small(&gn, &p) || predicted <= 1e-13 * c {
                let trial: Vec<f64> = p.iter().zip(gn.iter()).map(|(a, b)| a + b).collect();
                let ct = cost(model, data, &trial);
                // a converged Gauss-Newton step only changes the cost at round-off level
                if ct <= c * (1.0 + 1e-12) {
                    p = trial;
                    c = ct;
                }
                converged = true;
                break;
            }
        }
        loop {
            let mut a = jtj.clone();
            let dmax = (0..k).map(|j| jtj[(j, j)]).fold(0.0, f64::max);
            for j in 0..k {
                a[(j, j)] += lambda * jtj[(j, j)].max(1e-12 * dmax);
            }
            let Some(step) = solve(&a, &jtr) else {
                lambda *= 10.0;
                if lambda > 1e30 {
                    break 'outer;
                }
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let ct = cost(model, data, &trial);
            if ct.is_finite() && ct <= c {
                p = trial;
                c = ct;
                lambda = (lambda * 0.1).max(1e-15);
                let (_, a2, b2) = normal_equations(model, data, &p);
                jtj = a2;
                jtr = b2;
                break;
            }
            lambda *= 10.0;
            if lambda > 1e30 {
                break 'outer;
            }
        }
    }
    let (jac, jtj, _) = normal_equations(model, data, &p);
    let dof = n - k;
    let covariance = if dof > 0 && jacobian_condition(&jac) < 1e12 {
        jtj.try_inverse().map(|inv| inv * (c / dof as f64))
    } else {
        None
    };
    Ok(LmOutcome { params: p, covariance, cost: c, dof, converged, iterations })
}
