//! Shape-preserving (Fritsch-Carlson) cubic Hermite interpolation.

use crate::error::{domain, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl MonotoneCubic {
    /// Abscissas must be strictly increasing.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return domain("need at least two points with matching lengths");
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || y.iter().any(|v| !v.is_finite()) {
            return domain("abscissas must be strictly increasing and values finite");
        }
        let d: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k])).collect();
        let mut m = vec![0.0; n];
        m[0] = d[0];
        m[n - 1] = d[n - 2];
        for k in 1..n - 1 {
            m[k] = if d[k - 1] * d[k] <= 0.0 { 0.0 } else { 0.5 * (d[k - 1] + d[k]) };
        }
        for k in 0..n - 1 {
            if d[k] == 0.0 {
                m[k] = 0.0;
                m[k + 1] = 0.0;
                continue;
            }
            let a = m[k] / d[k];
            let b = m[k + 1] / d[k];
            if a < 0.0 {
                m[k] = 0.0;
            }
            if b < 0.0 {
                m[k + 1] = 0.0;
            }
            let s = a * a + b * b;
            if s > 9.0 {
                let t = 3.0 / s.sqrt();
                m[k] = t * a * d[k];
                m[k + 1] = t * b * d[k];
            }
        }
        Ok(Self { x, y, m })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    pub fn contains(&self, x: f64) -> bool {
        let (a, b) = self.range();
        x >= a && x <= b
    }

    fn segment(&self, x: f64) -> usize {
        match self.x.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.x.len() - 2),
        }
    }

    /// Value and derivative at `x`; `None` outside the tabulated range.
    pub fn eval_with_derivative(&self, x: f64) -> Option<(f64, f64)> {
        if !self.contains(x) {
            return None;
        }
        let k = self.segment(x);
        let h = self.x[k + 1] - self.x[k];
        let t = (x - self.x[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let v = h00 * self.y[k] + h10 * h * self.m[k] + h01 * self.y[k + 1] + h11 * h * self.m[k + 1];
        let d00 = 6.0 * t2 - 6.0 * t;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = -6.0 * t2 + 6.0 * t;
        let d11 = 3.0 * t2 - 2.0 * t;
        let dv = (d00 * self.y[k] + d01 * self.y[k + 1]) / h + d10 * self.m[k] + d11 * self.m[k + 1];
        Some((v, dv))
    }

    pub fn eval(&self, x: f64) -> Option<f64> {
        self.eval_with_derivative(x).map(|(v, _)| v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_nodes_and_lines() {
        let x = vec![0.0, 1.0, 2.5, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let c = MonotoneCubic::new(x.clone(), y.clone()).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((c.eval(*a).unwrap() - b).abs() < 1e-14);
        }
        let (v, d) = c.eval_with_derivative(1.7).unwrap();
        assert!((v - (3.0 - 3.4)).abs() < 1e-14 && (d + 2.0).abs() < 1e-14);
        assert!(c.eval(-0.1).is_none() && c.eval(4.1).is_none());
    }

    #[test]
    fn derivative_matches_difference() {
        let x: Vec<f64> = (0..15).map(|i| i as f64 * 0.4).collect();
        let y: Vec<f64> = x.iter().map(|v| (v * 0.8).sin()).collect();
        let c = MonotoneCubic::new(x, y).unwrap();
        for &t in &[0.3, 1.1, 2.9, 4.45] {
            let h = 1e-6;
            let fd = (c.eval(t + h).unwrap() - c.eval(t - h).unwrap()) / (2.0 * h);
            assert!((fd - c.eval_with_derivative(t).unwrap().1).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(MonotoneCubic::new(vec![0.0], vec![1.0]).is_err());
        assert!(MonotoneCubic::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn monotone_data_stays_monotone(steps in proptest::collection::vec((0.01..2.0f64, 0.0..3.0f64), 3..12)) {
            let mut x = vec![0.0];
            let mut y = vec![0.0];
            for (dx, dy) in &steps {
                x.push(x.last().unwrap() + dx);
                y.push(y.last().unwrap() + dy);
            }
            let c = MonotoneCubic::new(x.clone(), y).unwrap();
            let (a, b) = c.range();
            let mut prev = f64::NEG_INFINITY;
            for i in 0..=400 {
                let v = c.eval((a + (b - a) * i as f64 / 400.0).min(b)).unwrap();
                prop_assert!(v >= prev - 1e-12);
                prev = v;
            }
        }
    }
}
