//! Special functions not provided by the error-function crate.

/// Exponentially scaled modified Bessel function `I₀(x)·e^{-|x|}`.
///
/// Power series below |x| = 15 (all terms positive, no cancellation) and the
/// Hankel asymptotic expansion above.
pub fn bessel_i0e(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 15.0 {
        let q = 0.25 * ax * ax;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
            k += 1.0;
        }
        sum * (-ax).exp()
    } else {
        // Σ_k [(2k-1)!!]² / (k! 8^k x^k)
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..30 {
            let kf = k as f64;
            let next = term * (2.0 * kf - 1.0).powi(2) / (8.0 * kf * ax);
            if next.abs() >= term.abs() {
                break;
            }
            term = next;
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        sum / (2.0 * std::f64::consts::PI * ax).sqrt()
    }
}
