use super::interp::MonotoneCubic;
use super::lm::{levenberg_marquardt, LmOptions, Model};
use super::{chi2_per_dof, std_errors, DataSeries, FitResult};
use crate::error::{Error, Result};

/// `A exp(−γ x²)`.
struct Gaussian;

impl Model for Gaussian {
    fn n_params(&self) -> usize {
        2
    }
    fn value(&self, x: f64, p: &[f64]) -> Option<f64> {
        Some(p[0] * (-p[1] * x * x).exp())
    }
    fn gradient(&self, x: f64, p: &[f64], g: &mut [f64]) {
        let e = (-p[1] * x * x).exp();
        g[0] = e;
        g[1] = -p[0] * x * x * e;
    }
}

/// Weighted straight-line fit `v ≈ a + b u`, weights `w`.
pub(super) fn weighted_line(u: &[f64], v: &[f64], w: &[f64]) -> Option<(f64, f64)> {
    let sw: f64 = w.iter().sum();
    if !(sw > 0.0) {
        return None;
    }
    let mu = u.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mv = v.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let suu: f64 = u.iter().zip(w).map(|(a, b)| b * (a - mu).powi(2)).sum();
    let suv: f64 = u.iter().zip(v).zip(w).map(|((a, c), b)| b * (a - mu) * (c - mv)).sum();
    if !(suu > 0.0) {
        return None;
    }
    let slope = suv / suu;
    Some((mv - slope * mu, slope))
}

/// Fit `y = A exp(−x²/2σ²)`; returns `amplitude` and `sigma`.
pub fn fit_gaussian_decay(data: &DataSeries) -> Result<FitResult> {
    if data.len() < 3 {
        return Err(Error::NonIdentifiable(format!("{} points; at least 3 needed", data.len())));
    }
    let data = data.sorted();
    if data.is_constant() {
        return Err(Error::NonIdentifiable("constant data leaves the width undetermined".into()));
    }
    let (mut u, mut v, mut w) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..data.len() {
        if data.y[i] > 0.0 {
            u.push(data.x[i] * data.x[i]);
            v.push(data.y[i].ln());
            w.push(data.y[i] * data.y[i]);
        }
    }
    let (a0, g0) = match weighted_line(&u, &v, &w) {
        Some((a, b)) => (a.exp(), (-b).max(0.0)),
        None => (data.y.iter().fold(0.0f64, |m, v| m.max(v.abs())), 0.0),
    };
    let g0 = if g0 > 0.0 {
        g0
    } else {
        let xmax = data.x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        1.0 / (2.0 * xmax * xmax)
    };
    let out = levenberg_marquardt(&Gaussian, &data, &[a0, g0], LmOptions::default())?;
    let (a, g) = (out.params[0], out.params[1]);
    let sigma = if g > 0.0 { (2.0 * g).sqrt().recip() } else { f64::INFINITY };
    let errs = std_errors(&out).map(|e| vec![e[0], if g > 0.0 { sigma.powi(3) * e[1] } else { f64::INFINITY }]);
    Ok(FitResult {
        names: vec!["amplitude", "sigma"],
        params: vec![a, sigma],
        std_errors: errs,
        chi2_per_dof: chi2_per_dof(&out),
        converged: out.converged,
        iterations: out.iterations,
    })
}

/// `s_η · curve(s_Ω x)`.
struct Scaled<'a> {
    curve: &'a MonotoneCubic,
}

impl Model for Scaled<'_> {
    fn n_params(&self) -> usize {
        2
    }
    fn value(&self, x: f64, p: &[f64]) -> Option<f64> {
        self.curve.eval(p[1] * x).map(|c| p[0] * c)
    }
    fn gradient(&self, x: f64, p: &[f64], g: &mut [f64]) {
        let (c, dc) = self.curve.eval_with_derivative(p[1] * x).unwrap_or((f64::NAN, f64::NAN));
        g[0] = c;
        g[1] = p[0] * dc * x;
    }
}

/// Fit `y = s_η · curve(s_Ω x)` against a tabulated reference curve;
/// returns `s_eta` and `s_omega`.
pub fn fit_scaled_model(data: &DataSeries, curve: &MonotoneCubic) -> Result<FitResult> {
    if data.len() < 2 {
        return Err(Error::NonIdentifiable(format!("{} points; at least 2 needed", data.len())));
    }
    let data = data.sorted();
    let (a, b) = curve.range();
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    for &x in &data.x {
        if x > 0.0 {
            lo = lo.max(a / x);
            hi = hi.min(b / x);
        } else if x < 0.0 {
            lo = lo.max(b / x);
            hi = hi.min(a / x);
        } else if !curve.contains(0.0) {
            hi = -1.0;
        }
    }
    if !(hi >= lo && hi > 0.0) {
        let bad: Vec<String> = data.x.iter().filter(|x| !curve.contains(**x)).map(|x| format!("{x:e}")).collect();
        let detail = if bad.is_empty() { "no common scale maps all points into range".to_string() } else { bad.join(", ") };
        return Err(Error::Domain(format!("abscissas outside the reference curve [{a:e}, {b:e}]: {detail}")));
    }
    let lo = lo.max(hi * 1e-12);
    let model = Scaled { curve };
    let n_scan = 400;
    let mut best = (f64::INFINITY, 1.0, 1.0);
    for k in 0..=n_scan {
        let s = if hi > lo { lo * (hi / lo).powf(k as f64 / n_scan as f64) } else { lo };
        let (mut num, mut den) = (0.0, 0.0);
        let mut cs = Vec::with_capacity(data.len());
        for i in 0..data.len() {
            let c = curve.eval(s * data.x[i]).unwrap_or(0.0);
            let w2 = data.weight(i).powi(2);
            num += w2 * c * data.y[i];
            den += w2 * c * c;
            cs.push(c);
        }
        if den == 0.0 {
            continue;
        }
        let se = num / den;
        let cost: f64 = (0..data.len()).map(|i| (data.weight(i) * (data.y[i] - se * cs[i])).powi(2)).sum();
        if cost < best.0 {
            best = (cost, se, s);
        }
    }
    if !best.0.is_finite() {
        return Err(Error::NonIdentifiable("reference curve vanishes on the data".into()));
    }
    let out = levenberg_marquardt(&model, &data, &[best.1, best.2], LmOptions::default())?;
    Ok(FitResult {
        names: vec!["s_eta", "s_omega"],
        params: out.params.clone(),
        std_errors: std_errors(&out),
        chi2_per_dof: chi2_per_dof(&out),
        converged: out.converged,
        iterations: out.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn gaussian_data(sigma: f64, n: usize, span: f64) -> DataSeries {
        let x: Vec<f64> = (0..n).map(|i| span * i as f64 / (n - 1) as f64).collect();
        let y = x.iter().map(|x| 0.8 * (-x * x / (2.0 * sigma * sigma)).exp()).collect();
        DataSeries::new(x, y, None).unwrap()
    }

    #[test]
    fn gaussian_round_trips() {
        for &sigma in &[0.48e-3, 0.06e-3, 1.1e-3] {
            let r = fit_gaussian_decay(&gaussian_data(sigma, 25, 3.0 * sigma)).unwrap();
            assert!(r.converged);
            assert!((r.get("sigma").unwrap() / sigma - 1.0).abs() < 1e-6);
            assert!((r.get("amplitude").unwrap() / 0.8 - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn gaussian_degenerate_inputs() {
        let one = DataSeries::new(vec![1.0], vec![1.0], None).unwrap();
        assert!(matches!(fit_gaussian_decay(&one), Err(Error::NonIdentifiable(_))));
        let flat = DataSeries::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.4; 4], None).unwrap();
        assert!(matches!(fit_gaussian_decay(&flat), Err(Error::NonIdentifiable(_))));
    }

    #[test]
    fn gaussian_order_invariant() {
        let d = gaussian_data(0.5e-3, 20, 1.5e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let y: Vec<f64> = d.y.iter().map(|v| v + noise.sample(&mut rng)).collect();
        let a = DataSeries::new(d.x.clone(), y.clone(), None).unwrap();
        let b = DataSeries::new(d.x.iter().rev().cloned().collect(), y.iter().rev().cloned().collect(), None).unwrap();
        assert_eq!(fit_gaussian_decay(&a).unwrap(), fit_gaussian_decay(&b).unwrap());
    }

    #[test]
    fn gaussian_estimates_converge_with_data() {
        let sigma = 0.5e-3;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 0.02).unwrap();
        let mut prev_se = f64::INFINITY;
        for &n in &[100usize, 1000, 10000] {
            let d = gaussian_data(sigma, n, 2e-3);
            let y = d.y.iter().map(|v| v + noise.sample(&mut rng)).collect();
            let r = fit_gaussian_decay(&DataSeries::new(d.x, y, None).unwrap()).unwrap();
            let se = r.std_error("sigma").unwrap();
            let est = r.get("sigma").unwrap();
            assert!((est - sigma).abs() < 3.0 * se, "n {n}: {est} ± {se}");
            assert!(se < prev_se);
            prev_se = se;
        }
    }

    fn peaked_curve() -> MonotoneCubic {
        let x: Vec<f64> = (0..120).map(|i| 1.0 + i as f64 * 0.5).collect();
        let y = x.iter().map(|x| 0.6 * (x / 15.0) * (1.0 - (x / 15.0).ln()).clamp(0.0, 2.0) + 0.01).collect();
        MonotoneCubic::new(x, y).unwrap()
    }

    #[test]
    fn scaled_identity_and_round_trip() {
        let c = peaked_curve();
        let x: Vec<f64> = (0..30).map(|i| 2.0 + i as f64).collect();
        let y = x.iter().map(|&x| c.eval(x).unwrap()).collect();
        let r = fit_scaled_model(&DataSeries::new(x.clone(), y, None).unwrap(), &c).unwrap();
        assert!((r.params[0] - 1.0).abs() < 1e-6 && (r.params[1] - 1.0).abs() < 1e-6, "{:?}", r.params);

        let xs: Vec<f64> = (0..30).map(|i| 1.0 + i as f64 * 0.5).collect();
        let y = xs.iter().map(|&x| 0.5 * c.eval(2.0 * x).unwrap()).collect();
        let r = fit_scaled_model(&DataSeries::new(xs, y, None).unwrap(), &c).unwrap();
        assert!(r.converged);
        assert!((r.get("s_eta").unwrap() - 0.5).abs() < 1e-6 * 0.5);
        assert!((r.get("s_omega").unwrap() - 2.0).abs() < 1e-6 * 2.0);
    }

    #[test]
    fn scaled_out_of_range_lists_points() {
        let c = peaked_curve();
        let d = DataSeries::new(vec![0.1, 5.0, 500.0], vec![0.1, 0.2, 0.3], None).unwrap();
        match fit_scaled_model(&d, &c) {
            Err(Error::Domain(msg)) => assert!(msg.contains("1e-1") && msg.contains("5e2"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }
}
