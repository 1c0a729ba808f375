//! Quadrature rules: Gauss-Legendre nodes, uniform (trapezoid) rules for
//! periodic integrands, and adaptive Simpson for one-off smooth integrals.

use alloc::vec::Vec;
use num_traits::Float;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// Legendre polynomial with the usual asymptotic initial guesses.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "quadrature order must be at least 1");
    let n = order;
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess for the i-th positive root
        let mut x = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n and P_n' by the three-term recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss-Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre_on(a: f64, b: f64, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(order);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        xs.iter().map(|x| mid + half * x).collect(),
        ws.iter().map(|w| w * half).collect(),
    )
}

/// Uniform nodes on a periodic axis `[a, b)` with equal weights; for smooth
/// periodic integrands this trapezoid rule converges spectrally.
pub fn periodic_uniform(a: f64, b: f64, count: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(count >= 1);
    let h = (b - a) / count as f64;
    (
        (0..count).map(|k| a + h * k as f64).collect(),
        alloc::vec![h; count],
    )
}

/// Adaptive Simpson quadrature to the given absolute tolerance.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Trapezoid rule on an already-sampled grid, over the sub-interval
/// `[lo, hi]` of the grid range, with linear interpolation at the cut cells.
/// The grid must be strictly increasing.
pub fn trapezoid_window(u: &[f64], y: &[f64], lo: f64, hi: f64) -> f64 {
    debug_assert_eq!(u.len(), y.len());
    if u.len() < 2 || hi <= lo {
        return 0.0;
    }
    let lo = lo.max(u[0]);
    let hi = hi.min(u[u.len() - 1]);
    if hi <= lo {
        return 0.0;
    }
    let value_at = |t: f64| -> f64 {
        // binary search for the cell containing t
        let mut a = 0usize;
        let mut b = u.len() - 1;
        while b - a > 1 {
            let m = (a + b) / 2;
            if u[m] <= t {
                a = m;
            } else {
                b = m;
            }
        }
        let w = (t - u[a]) / (u[b] - u[a]);
        y[a] * (1.0 - w) + y[b] * w
    };
    let mut total = 0.0;
    let mut prev_t = lo;
    let mut prev_y = value_at(lo);
    for k in 0..u.len() {
        if u[k] <= lo {
            continue;
        }
        if u[k] >= hi {
            break;
        }
        total += 0.5 * (prev_y + y[k]) * (u[k] - prev_t);
        prev_t = u[k];
        prev_y = y[k];
    }
    let end_y = value_at(hi);
    total += 0.5 * (prev_y + end_y) * (hi - prev_t);
    total
}
