//! Derivative-free local optimizers: Brent's method in one dimension and a
//! box-constrained Nelder–Mead simplex in two.

const GOLDEN: f64 = 0.381_966_011_250_105_1;

/// Minimize `f` on `[a, b]` with Brent's parabolic/golden-section method.
/// Returns `(x_min, f(x_min))`.
pub fn brent_minimize<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64, max_iter: usize) -> (f64, f64) {
    let (mut a, mut b) = if a < b { (a, b) } else { (b, a) };
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..max_iter {
        let xm = 0.5 * (a + b);
        let tol1 = rel_tol * x.abs() + 1e-300;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

/// Maximize `f` on `[a, b]`; returns `(x_max, f(x_max))`.
pub fn brent_maximize<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64, max_iter: usize) -> (f64, f64) {
    let (x, fx) = brent_minimize(|x| -f(x), a, b, rel_tol, max_iter);
    (x, -fx)
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexResult {
    pub x: [f64; 2],
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder–Mead minimization in two dimensions, with trial points clamped into
/// the box `[lo, hi]`. Stops when the spread of simplex values falls below
/// `f_tol·(|f_best| + tiny)` or after `max_iter` iterations.
pub fn nelder_mead_2d<F: FnMut([f64; 2]) -> f64>(
    mut f: F,
    start: [f64; 2],
    step: [f64; 2],
    lo: [f64; 2],
    hi: [f64; 2],
    f_tol: f64,
    max_iter: usize,
) -> SimplexResult {
    let clamp = |p: [f64; 2]| [p[0].clamp(lo[0], hi[0]), p[1].clamp(lo[1], hi[1])];
    let mut pts = [
        clamp(start),
        clamp([start[0] + step[0], start[1]]),
        clamp([start[0], start[1] + step[1]]),
    ];
    // keep the simplex non-degenerate when the start sits on an upper bound
    for (i, p) in pts.iter_mut().enumerate().skip(1) {
        let k = i - 1;
        if p[k] == start[k].clamp(lo[k], hi[k]) {
            p[k] = (start[k] - step[k]).clamp(lo[k], hi[k]);
        }
    }
    let mut vals = pts.map(&mut f);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        pts = order.map(|i| pts[i]);
        vals = order.map(|i| vals[i]);
        let spread = (vals[2] - vals[0]).abs();
        let size = (pts[2][0] - pts[0][0]).abs().max((pts[1][0] - pts[0][0]).abs()) / step[0].abs().max(1e-300)
            + (pts[2][1] - pts[0][1]).abs().max((pts[1][1] - pts[0][1]).abs()) / step[1].abs().max(1e-300);
        if spread <= f_tol * (vals[0].abs() + 1e-300) && size < 1e-6 || size < 1e-12 {
            converged = true;
            break;
        }
        let centroid = [(pts[0][0] + pts[1][0]) / 2.0, (pts[0][1] + pts[1][1]) / 2.0];
        let along = |t: f64| clamp([centroid[0] + t * (pts[2][0] - centroid[0]), centroid[1] + t * (pts[2][1] - centroid[1])]);
        let xr = along(-1.0);
        let fr = f(xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(xe);
            if fe < fr {
                pts[2] = xe;
                vals[2] = fe;
            } else {
                pts[2] = xr;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            pts[2] = xr;
            vals[2] = fr;
        } else {
            let (xc, fc) = if fr < vals[2] {
                let xc = along(-0.5);
                (xc, f(xc))
            } else {
                let xc = along(0.5);
                (xc, f(xc))
            };
            if fc < vals[2].min(fr) {
                pts[2] = xc;
                vals[2] = fc;
            } else {
                for i in 1..3 {
                    pts[i] = [(pts[0][0] + pts[i][0]) / 2.0, (pts[0][1] + pts[i][1]) / 2.0];
                    vals[i] = f(pts[i]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
    SimplexResult { x: pts[best], value: vals[best], iterations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_parabola_vertex() {
        let (x, fx) = brent_minimize(|x| (x - 1.234).powi(2) + 0.5, -10.0, 10.0, 1e-12, 200);
        assert!((x - 1.234).abs() < 1e-8);
        assert!((fx - 0.5).abs() < 1e-15);
    }

    #[test]
    fn brent_maximize_cosine() {
        let (x, fx) = brent_maximize(f64::cos, -1.0, 2.0, 1e-12, 200);
        assert!(x.abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-14);
    }

    #[test]
    fn simplex_on_rosenbrock() {
        let r = nelder_mead_2d(
            |p| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2),
            [-1.2, 1.0],
            [0.1, 0.1],
            [-5.0, -5.0],
            [5.0, 5.0],
            1e-14,
            5000,
        );
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r);
    }

    #[test]
    fn simplex_respects_box() {
        let r = nelder_mead_2d(|p| p[0] + p[1], [0.5, 0.5], [0.1, 0.1], [0.0, 0.0], [1.0, 1.0], 1e-12, 500);
        assert!(r.x[0] >= 0.0 && r.x[1] >= 0.0);
        assert!(r.value < 1e-6);
    }
}
