//! Composite quadrature rules shared by the operator and solver modules.

use num_complex::Complex64;

/// Composite trapezoid rule on a uniform grid with `panels` subintervals.
///
/// Returns exactly 0 when `a == b`.
pub fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let h = (b - a) / panels as f64;
    let mut sum = 0.5 * (f(a) + f(b));
    for i in 1..panels {
        sum += f(a + i as f64 * h);
    }
    sum * h
}

/// Composite trapezoid with one Richardson step: combines the full-resolution
/// estimate with the half-resolution estimate on the even-indexed nodes,
/// `(4 T_n - T_{n/2}) / 3`. `panels` must be even.
pub fn trapezoid_refined(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    debug_assert!(panels % 2 == 0, "Richardson step needs an even panel count");
    if a == b {
        return 0.0;
    }
    let h = (b - a) / panels as f64;
    let ends = 0.5 * (f(a) + f(b));
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..panels {
        let v = f(a + i as f64 * h);
        if i % 2 == 0 {
            even += v;
        } else {
            odd += v;
        }
    }
    let fine = (ends + odd + even) * h;
    let coarse = (ends + even) * 2.0 * h;
    (4.0 * fine - coarse) / 3.0
}

/// Composite Simpson rule; `panels` must be even.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    debug_assert!(panels % 2 == 0, "Simpson rule needs an even panel count");
    if a == b {
        return 0.0;
    }
    let h = (b - a) / panels as f64;
    let mut sum = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Exponentially weighted cumulative trapezoid prefix:
/// `out[i] = integral over [0, i*h] of g(s) * exp(mu * (i*h - s)) ds`
/// for samples `g[i]` at `s = i*h`.
///
/// The recurrence advances the whole prefix by one panel at a time,
/// `J_{i+1} = e^{mu h} (J_i + h/2 g_i) + h/2 g_{i+1}`, so no factor
/// `e^{mu s}` with large `s` is ever formed on its own.
pub fn weighted_prefix(g: &[f64], h: f64, mu: Complex64) -> Vec<Complex64> {
    let step = (mu * h).exp();
    let half = Complex64::new(0.5 * h, 0.0);
    let mut out = Vec::with_capacity(g.len());
    let mut acc = Complex64::new(0.0, 0.0);
    out.push(acc);
    for w in g.windows(2) {
        acc = step * (acc + half * w[0]) + half * w[1];
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_zero_width() {
        assert_eq!(trapezoid(|s| s.sin(), 1.0, 1.0, 64), 0.0);
    }

    #[test]
    fn trapezoid_linear_exact() {
        let v = trapezoid(|s| 2.0 * s + 1.0, 0.0, 3.0, 8);
        assert!((v - 12.0).abs() < 1e-13);
    }

    #[test]
    fn trapezoid_second_order() {
        let exact = 1.0 - (1.0f64).cos();
        let e1 = (trapezoid(|s| s.sin(), 0.0, 1.0, 64) - exact).abs();
        let e2 = (trapezoid(|s| s.sin(), 0.0, 1.0, 128) - exact).abs();
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.1, "observed order {order}");
    }

    #[test]
    fn richardson_beats_plain() {
        let exact = 1.0 - (1.0f64).cos();
        let plain = (trapezoid(|s| s.sin(), 0.0, 1.0, 64) - exact).abs();
        let refined = (trapezoid_refined(|s| s.sin(), 0.0, 1.0, 64) - exact).abs();
        assert!(refined < plain / 100.0);
    }

    #[test]
    fn simpson_cubic_exact() {
        let v = simpson(|s| s * s * s, 0.0, 2.0, 4);
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_prefix_matches_direct_quadrature() {
        let n = 512;
        let h = 1.0 / n as f64;
        let g: Vec<f64> = (0..=n).map(|i| (i as f64 * h).sin()).collect();
        let mu = Complex64::new(-0.7, 1.3);
        let prefix = weighted_prefix(&g, h, mu);
        let t = 0.75;
        let i = (t / h).round() as usize;
        let direct = trapezoid(
            |s| (s.sin() * (mu * (t - s)).exp()).re,
            0.0,
            t,
            i,
        );
        let direct_im = trapezoid(
            |s| (s.sin() * (mu * (t - s)).exp()).im,
            0.0,
            t,
            i,
        );
        assert!((prefix[i].re - direct).abs() < 1e-10);
        assert!((prefix[i].im - direct_im).abs() < 1e-10);
    }
}
