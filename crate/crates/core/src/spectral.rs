//! Sine-series analysis and synthesis on the unit interval, together with
//! the forcing-side regularity machinery: fourth-derivative decay factors
//! and the boundary/initial compatibility checks.
//!
//! Coefficients follow the normalized convention
//! `f_m(t) = 2 * integral_0^1 f(t,x) sin(m pi x) dx`, so that
//! `f = sum f_m sin(m pi x)` reconstructs admissible fields pointwise.

use std::f64::consts::PI;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{self, Expr, Var};
use crate::quad;

/// Default panel count for the x-quadrature (composite Simpson, 1025 nodes).
pub const DEFAULT_X_PANELS: usize = 1024;

/// Edge sampling resolution for [`validate_compatibility`].
pub const COMPATIBILITY_SAMPLES: usize = 129;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("time {t} lies outside the horizon [0, {q}]")]
    OutsideHorizon { t: f64, q: f64 },
    #[error("mode count must be at least 1")]
    NoModes,
    #[error("forcing does not expose the partial derivative d^{dt}/dt d^{dx}/dx")]
    DerivativeUnavailable { dt: usize, dx: usize },
    #[error("modal traces must share one time grid")]
    TimeGridMismatch,
    #[error("modal coefficients carry no derivative trace")]
    MissingDerivativeTrace,
    #[error("forcing expression error: {0}")]
    Expr(#[from] expr::DeriveError),
}

/// Space-time forcing `f(t, x)` on `[0, q] x [0, 1]` exposing mixed partial
/// derivatives up to declared orders.
#[derive(Clone)]
pub struct ForcingField {
    q: f64,
    max_dt: usize,
    max_dx: usize,
    eval: Arc<dyn Fn(usize, usize, f64, f64) -> f64 + Send + Sync>,
}

impl ForcingField {
    /// `eval(dt, dx, t, x)` must return the mixed partial derivative for all
    /// `dt <= max_dt`, `dx <= max_dx`.
    pub fn new(
        q: f64,
        max_dt: usize,
        max_dx: usize,
        eval: impl Fn(usize, usize, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ForcingField {
            q,
            max_dt,
            max_dx,
            eval: Arc::new(eval),
        }
    }

    /// Identically zero forcing.
    pub fn zero(q: f64) -> Self {
        Self::new(q, usize::MAX, usize::MAX, |_, _, _, _| 0.0)
    }

    /// Build from an expression, precomputing the symbolic derivative table
    /// up to third order in `t` and fourth order in `x`.
    pub fn from_expr(e: &Expr, q: f64) -> Result<Self, SpectralError> {
        let max_dt = 3;
        let max_dx = 4;
        let mut table: Vec<Vec<Expr>> = Vec::with_capacity(max_dt + 1);
        for dt in 0..=max_dt {
            let base_t = expr::differentiate(e, Var::T, dt)?;
            let mut row = Vec::with_capacity(max_dx + 1);
            for dx in 0..=max_dx {
                row.push(expr::differentiate(&base_t, Var::X, dx)?);
            }
            table.push(row);
        }
        Ok(Self::new(q, max_dt, max_dx, move |dt, dx, t, x| {
            expr::eval(&table[dt][dx], t, x).unwrap_or(f64::NAN)
        }))
    }

    pub fn horizon(&self) -> f64 {
        self.q
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        (self.eval)(0, 0, t, x)
    }

    /// Mixed partial derivative; errors if the requested order is not declared.
    pub fn partial(&self, dt: usize, dx: usize, t: f64, x: f64) -> Result<f64, SpectralError> {
        if dt > self.max_dt || dx > self.max_dx {
            return Err(SpectralError::DerivativeUnavailable { dt, dx });
        }
        Ok((self.eval)(dt, dx, t, x))
    }

    fn check_time(&self, t: f64) -> Result<(), SpectralError> {
        if t < 0.0 || t > self.q {
            return Err(SpectralError::OutsideHorizon { t, q: self.q });
        }
        Ok(())
    }
}

/// Panel count guaranteeing at least 16 quadrature nodes per shortest
/// wavelength at mode `m_max`.
fn x_panels_for(m_max: usize) -> usize {
    let needed = 8 * m_max;
    let panels = DEFAULT_X_PANELS.max(needed);
    panels + panels % 2
}

fn sine_quadrature(
    f: &ForcingField,
    dt: usize,
    dx: usize,
    m: usize,
    t: f64,
    panels: usize,
) -> Result<f64, SpectralError> {
    if dt > f.max_dt || dx > f.max_dx {
        return Err(SpectralError::DerivativeUnavailable { dt, dx });
    }
    let w = m as f64 * PI;
    let integral = quad::simpson(
        |x| {
            let v = (f.eval)(dt, dx, t, x);
            v * (w * x).sin()
        },
        0.0,
        1.0,
        panels,
    );
    Ok(2.0 * integral)
}

/// Normalized sine coefficients `f_1(t) .. f_{m_max}(t)` of the forcing at
/// a fixed time.
pub fn sine_coefficients(
    f: &ForcingField,
    m_max: usize,
    t: f64,
) -> Result<Vec<f64>, SpectralError> {
    sine_coefficients_partial(f, 0, m_max, t)
}

/// Sine coefficients of the time-partial `d^dt f / dt^dt` at a fixed time.
pub fn sine_coefficients_partial(
    f: &ForcingField,
    dt: usize,
    m_max: usize,
    t: f64,
) -> Result<Vec<f64>, SpectralError> {
    if m_max == 0 {
        return Err(SpectralError::NoModes);
    }
    f.check_time(t)?;
    if dt > f.max_dt {
        return Err(SpectralError::DerivativeUnavailable { dt, dx: 0 });
    }
    let panels = x_panels_for(m_max);
    (1..=m_max)
        .map(|m| sine_quadrature(f, dt, 0, m, t, panels))
        .collect()
}

/// Synthesize `u(t_i, x_j) = sum_m T_m(t_i) sin(m pi x_j)` from per-mode
/// traces over a shared time grid. The output is exactly zero at `x = 0`
/// and `x = 1`.
pub fn synthesize(
    modal: &[(usize, Vec<f64>)],
    x_grid: &[f64],
) -> Result<Vec<Vec<f64>>, SpectralError> {
    let nt = modal.first().map(|(_, trace)| trace.len()).unwrap_or(0);
    if modal.iter().any(|(_, trace)| trace.len() != nt) {
        return Err(SpectralError::TimeGridMismatch);
    }
    let mut out = vec![vec![0.0; x_grid.len()]; nt];
    for (j, &x) in x_grid.iter().enumerate() {
        if x == 0.0 || x == 1.0 {
            continue; // boundary rows stay exactly zero
        }
        for (m, trace) in modal {
            let s = (*m as f64 * PI * x).sin();
            for (i, value) in trace.iter().enumerate() {
                out[i][j] += value * s;
            }
        }
    }
    Ok(out)
}

/// The three sine-weighted quadratures of the fourth x-derivative and its
/// first two time derivatives, under the module's normalization. For
/// forcing satisfying the compatibility conditions,
/// `f_m(t) = f40 / (m pi)^4` within quadrature tolerance.
pub fn decay_factors(
    f: &ForcingField,
    m: usize,
    t: f64,
) -> Result<(f64, f64, f64), SpectralError> {
    if m == 0 {
        return Err(SpectralError::NoModes);
    }
    f.check_time(t)?;
    if f.max_dx < 4 || f.max_dt < 2 {
        return Err(SpectralError::DerivativeUnavailable {
            dt: f.max_dt.min(2),
            dx: 4,
        });
    }
    let panels = x_panels_for(m);
    let f40 = sine_quadrature(f, 0, 4, m, t, panels)?;
    let f41 = sine_quadrature(f, 1, 4, m, t, panels)?;
    let f42 = sine_quadrature(f, 2, 4, m, t, panels)?;
    Ok((f40, f41, f42))
}

#[derive(Debug, Clone)]
pub struct CompatibilityCondition {
    pub name: &'static str,
    pub max_violation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct CompatibilityReport {
    pub conditions: Vec<CompatibilityCondition>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Check the seven compatibility conditions on the forcing: the first three
/// time derivatives vanish at `t = 0`, and `f` and `f_xx` vanish on both
/// lateral boundaries. Each condition is sampled on 129 points of the
/// relevant edge.
pub fn validate_compatibility(
    f: &ForcingField,
    tol: f64,
) -> Result<CompatibilityReport, SpectralError> {
    let q = f.q;
    let n = COMPATIBILITY_SAMPLES;

    let t0_edge = |dt: usize| -> Result<f64, SpectralError> {
        let mut worst = 0.0f64;
        for j in 0..n {
            let x = j as f64 / (n - 1) as f64;
            worst = worst.max(f.partial(dt, 0, 0.0, x)?.abs());
        }
        Ok(worst)
    };
    let x_edge = |dx: usize, x: f64| -> Result<f64, SpectralError> {
        let mut worst = 0.0f64;
        for j in 0..n {
            let t = q * j as f64 / (n - 1) as f64;
            worst = worst.max(f.partial(0, dx, t, x)?.abs());
        }
        Ok(worst)
    };

    let checks: Vec<(&'static str, f64)> = vec![
        ("dt_f_at_t0", t0_edge(1)?),
        ("dt2_f_at_t0", t0_edge(2)?),
        ("dt3_f_at_t0", t0_edge(3)?),
        ("f_at_x0", x_edge(0, 0.0)?),
        ("f_at_x1", x_edge(0, 1.0)?),
        ("dx2_f_at_x0", x_edge(2, 0.0)?),
        ("dx2_f_at_x1", x_edge(2, 1.0)?),
    ];

    let conditions: Vec<CompatibilityCondition> = checks
        .into_iter()
        .map(|(name, max_violation)| CompatibilityCondition {
            name,
            max_violation,
            pass: max_violation <= tol,
        })
        .collect();
    let pass = conditions.iter().all(|c| c.pass);
    Ok(CompatibilityReport {
        conditions,
        tolerance: tol,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Modal coefficient traces
// ---------------------------------------------------------------------------

type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

enum ModalTrace {
    ClosedForm {
        value: TimeFn,
        derivative: Option<TimeFn>,
        second: Option<TimeFn>,
    },
    Sampled {
        h: f64,
        value: Vec<f64>,
        derivative: Vec<f64>,
        second: Option<Vec<f64>>,
    },
}

/// One mode's forcing coefficient `f_m(t)` on `[0, q]`, either closed-form
/// or sampled with cubic Hermite reconstruction between samples.
pub struct ModalCoefficients {
    pub m: usize,
    trace: ModalTrace,
    /// Set when the derivative trace came from finite differences rather
    /// than an analytic source.
    pub derivative_is_approximate: bool,
}

fn hermite(h: f64, values: &[f64], slopes: &[f64], t: f64) -> f64 {
    let n = values.len() - 1;
    let pos = (t / h).floor();
    let i = (pos as usize).min(n.saturating_sub(1));
    let s = (t - i as f64 * h) / h;
    let (y0, y1) = (values[i], values[i + 1]);
    let (d0, d1) = (slopes[i] * h, slopes[i + 1] * h);
    let s2 = s * s;
    let s3 = s2 * s;
    y0 * (2.0 * s3 - 3.0 * s2 + 1.0)
        + d0 * (s3 - 2.0 * s2 + s)
        + y1 * (-2.0 * s3 + 3.0 * s2)
        + d1 * (s3 - s2)
}

impl ModalCoefficients {
    pub fn from_closures(
        m: usize,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: Option<TimeFn>,
        second: Option<TimeFn>,
    ) -> Self {
        ModalCoefficients {
            m,
            trace: ModalTrace::ClosedForm {
                value: Arc::new(value),
                derivative,
                second,
            },
            derivative_is_approximate: false,
        }
    }

    /// Sample the coefficient traces of all modes `1..=m_max` on a uniform
    /// grid of `samples` panels over `[0, q]`. One sine quadrature per time
    /// node covers every mode.
    pub fn sample(
        f: &ForcingField,
        m_max: usize,
        samples: usize,
    ) -> Result<Vec<ModalCoefficients>, SpectralError> {
        let q = f.horizon();
        let h = q / samples as f64;
        let mut value = vec![Vec::with_capacity(samples + 1); m_max];
        let mut derivative = vec![Vec::with_capacity(samples + 1); m_max];
        let with_second = f.max_dt >= 2;
        let mut second = vec![Vec::with_capacity(samples + 1); m_max];
        let analytic_derivative = f.max_dt >= 1;
        for i in 0..=samples {
            let t = (i as f64 * h).min(q);
            let c0 = sine_coefficients(f, m_max, t)?;
            for (m, v) in c0.into_iter().enumerate() {
                value[m].push(v);
            }
            if analytic_derivative {
                let c1 = sine_coefficients_partial(f, 1, m_max, t)?;
                for (m, v) in c1.into_iter().enumerate() {
                    derivative[m].push(v);
                }
            }
            if with_second {
                let c2 = sine_coefficients_partial(f, 2, m_max, t)?;
                for (m, v) in c2.into_iter().enumerate() {
                    second[m].push(v);
                }
            }
        }
        if !analytic_derivative {
            // Central differences on the sampled trace, one-sided at the ends.
            for m in 0..m_max {
                let v = &value[m];
                let n = v.len() - 1;
                let mut d = Vec::with_capacity(n + 1);
                for i in 0..=n {
                    let slope = if i == 0 {
                        (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
                    } else if i == n {
                        (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * h)
                    } else {
                        (v[i + 1] - v[i - 1]) / (2.0 * h)
                    };
                    d.push(slope);
                }
                derivative[m] = d;
            }
        }
        Ok((0..m_max)
            .map(|m| ModalCoefficients {
                m: m + 1,
                trace: ModalTrace::Sampled {
                    h,
                    value: std::mem::take(&mut value[m]),
                    derivative: std::mem::take(&mut derivative[m]),
                    second: if with_second {
                        Some(std::mem::take(&mut second[m]))
                    } else {
                        None
                    },
                },
                derivative_is_approximate: !analytic_derivative,
            })
            .collect())
    }

    pub fn value(&self, t: f64) -> f64 {
        match &self.trace {
            ModalTrace::ClosedForm { value, .. } => value(t),
            ModalTrace::Sampled {
                h,
                value,
                derivative,
                ..
            } => hermite(*h, value, derivative, t),
        }
    }

    pub fn derivative(&self, t: f64) -> Result<f64, SpectralError> {
        match &self.trace {
            ModalTrace::ClosedForm { derivative, .. } => derivative
                .as_ref()
                .map(|d| d(t))
                .ok_or(SpectralError::MissingDerivativeTrace),
            ModalTrace::Sampled {
                h,
                derivative,
                second,
                value,
                ..
            } => {
                if let Some(second) = second {
                    Ok(hermite(*h, derivative, second, t))
                } else {
                    // Derivative of the Hermite interpolant of the values.
                    let n = value.len() - 1;
                    let i = ((t / h).floor() as usize).min(n.saturating_sub(1));
                    let s = (t - i as f64 * h) / h;
                    let (y0, y1) = (value[i], value[i + 1]);
                    let (d0, d1) = (derivative[i] * h, derivative[i + 1] * h);
                    let s2 = s * s;
                    let v = y0 * (6.0 * s2 - 6.0 * s)
                        + d0 * (3.0 * s2 - 4.0 * s + 1.0)
                        + y1 * (-6.0 * s2 + 6.0 * s)
                        + d1 * (3.0 * s2 - 2.0 * s);
                    Ok(v / h)
                }
            }
        }
    }

    pub fn second_derivative(&self, t: f64) -> Result<f64, SpectralError> {
        match &self.trace {
            ModalTrace::ClosedForm { second, .. } => second
                .as_ref()
                .map(|d| d(t))
                .ok_or(SpectralError::MissingDerivativeTrace),
            ModalTrace::Sampled { h, second, .. } => {
                let second = second.as_ref().ok_or(SpectralError::MissingDerivativeTrace)?;
                let n = second.len() - 1;
                let i = ((t / h).floor() as usize).min(n.saturating_sub(1));
                let s = (t - i as f64 * h) / h;
                Ok(second[i] * (1.0 - s) + second[i + 1] * s)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use proptest::prelude::*;

    fn field(text: &str, q: f64) -> ForcingField {
        ForcingField::from_expr(&parse(text).unwrap(), q).unwrap()
    }

    #[test]
    fn orthonormality_picks_single_mode() {
        let f = field("sin(2*pi*x)", 1.0);
        let c = sine_coefficients(&f, 4, 0.3).unwrap();
        assert!((c[1] - 1.0).abs() < 1e-10);
        for m in [0, 2, 3] {
            assert!(c[m].abs() < 1e-10, "mode {} leaked {}", m + 1, c[m]);
        }
    }

    #[test]
    fn parabola_coefficients_match_closed_form() {
        // 2 * integral x(1-x) sin(m pi x) dx = 8/(m pi)^3 for odd m, 0 for even.
        let f = field("x*(1-x)", 1.0);
        let c = sine_coefficients(&f, 6, 0.0).unwrap();
        for (idx, got) in c.iter().enumerate() {
            let m = idx + 1;
            let expected = if m % 2 == 1 {
                8.0 / (m as f64 * PI).powi(3)
            } else {
                0.0
            };
            assert!(
                (got - expected).abs() < 1e-9,
                "mode {m}: got {got}, expected {expected}"
            );
        }
        assert!((c[0] - 0.258012).abs() < 1e-5);
    }

    #[test]
    fn zero_forcing_has_zero_coefficients() {
        let c = sine_coefficients(&ForcingField::zero(1.0), 8, 0.5).unwrap();
        assert!(c.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn coefficients_respect_horizon() {
        let f = field("t*x", 1.0);
        assert!(matches!(
            sine_coefficients(&f, 2, 1.5),
            Err(SpectralError::OutsideHorizon { .. })
        ));
    }

    #[test]
    fn synthesize_examples() {
        let u = synthesize(&[(1, vec![1.0])], &[0.5]).unwrap();
        assert!((u[0][0] - 1.0).abs() < 1e-15);

        let u = synthesize(&[(1, vec![0.0]), (2, vec![0.0])], &[0.25, 0.75]).unwrap();
        assert!(u[0].iter().all(|v| *v == 0.0));

        let u = synthesize(&[(1, vec![1.0]), (3, vec![1.0 / 3.0])], &[0.25]).unwrap();
        assert!((u[0][0] - 0.942809).abs() < 1e-6);
    }

    #[test]
    fn synthesize_rejects_mismatched_grids() {
        let err = synthesize(&[(1, vec![1.0, 2.0]), (2, vec![1.0])], &[0.5]);
        assert!(matches!(err, Err(SpectralError::TimeGridMismatch)));
    }

    #[test]
    fn synthesize_boundary_exactly_zero() {
        let u = synthesize(&[(1, vec![2.0]), (2, vec![-0.5])], &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(u[0][0], 0.0);
        assert_eq!(u[0][2], 0.0);
        assert!(u[0][1] != 0.0);
    }

    #[test]
    fn decay_factor_identity_for_sine() {
        let f = field("sin(pi*x)", 1.0);
        let (f40, _, _) = decay_factors(&f, 1, 0.5).unwrap();
        let fm = sine_coefficients(&f, 1, 0.5).unwrap()[0];
        assert!((fm - 1.0).abs() < 1e-10);
        assert!((f40 / PI.powi(4) - fm).abs() < 1e-8);
    }

    #[test]
    fn decay_factors_trivial_cases() {
        let (a, b, c) = decay_factors(&ForcingField::zero(1.0), 3, 0.2).unwrap();
        assert_eq!((a, b, c), (0.0, 0.0, 0.0));

        // Mode-2 orthogonality against sin(pi x).
        let f = field("t^4*sin(pi*x)", 1.0);
        let (a, b, c) = decay_factors(&f, 2, 0.7).unwrap();
        assert!(a.abs() < 1e-9 && b.abs() < 1e-9 && c.abs() < 1e-9);
    }

    #[test]
    fn decay_factors_need_declared_derivatives() {
        let shallow = ForcingField::new(1.0, 1, 2, |_, _, t, x| t * x);
        assert!(matches!(
            decay_factors(&shallow, 1, 0.5),
            Err(SpectralError::DerivativeUnavailable { .. })
        ));
    }

    #[test]
    fn compatibility_examples() {
        let tol = 1e-9;
        let pass = validate_compatibility(&field("t^4*sin(pi*x)", 1.0), tol).unwrap();
        assert!(pass.pass, "{:?}", pass.conditions);
        assert_eq!(pass.conditions.len(), 7);

        let fail_t = validate_compatibility(&field("t*sin(pi*x)", 1.0), tol).unwrap();
        assert!(!fail_t.pass);
        let first = fail_t.conditions.iter().find(|c| c.name == "dt_f_at_t0").unwrap();
        assert!(!first.pass && first.max_violation > 0.9);

        let fail_x = validate_compatibility(&field("x*(1-x)", 1.0), tol).unwrap();
        assert!(!fail_x.pass);
        let edge = fail_x.conditions.iter().find(|c| c.name == "dx2_f_at_x0").unwrap();
        assert!(!edge.pass && (edge.max_violation - 2.0).abs() < 1e-12);
    }

    #[test]
    fn modal_sampling_reproduces_time_profile() {
        let f = field("t^2*sin(pi*x)", 1.0);
        let modal = ModalCoefficients::sample(&f, 2, 64).unwrap();
        for t in [0.0, 0.31, 0.77, 1.0] {
            assert!((modal[0].value(t) - t * t).abs() < 1e-8);
            assert!((modal[0].derivative(t).unwrap() - 2.0 * t).abs() < 1e-8);
            assert!(modal[1].value(t).abs() < 1e-9);
        }
        assert!(!modal[0].derivative_is_approximate);
    }

    #[test]
    fn truncated_energy_is_nondecreasing_in_mode_count() {
        let f = field("x*(1-x)", 1.0);
        let c = sine_coefficients(&f, 16, 0.0).unwrap();
        let mut prev = 0.0;
        for m in 1..=16 {
            let energy: f64 = c[..m].iter().map(|v| v * v).sum();
            assert!(energy >= prev);
            prev = energy;
        }
    }

    proptest! {
        // Band-limited analysis/synthesis round trip: coefficients recover
        // the spectrum and resynthesis reproduces the field on a grid.
        #[test]
        fn band_limited_round_trip(coeffs in proptest::collection::vec(-2.0f64..2.0, 1..6)) {
            let modes: Vec<(usize, f64)> = coeffs.iter().cloned().enumerate()
                .map(|(i, c)| (i + 1, c)).collect();
            let modes_for_eval = modes.clone();
            let f = ForcingField::new(1.0, 0, 0, move |_, _, _t, x| {
                modes_for_eval.iter().map(|(m, c)| c * (*m as f64 * PI * x).sin()).sum()
            });
            let recovered = sine_coefficients(&f, modes.len(), 0.5).unwrap();
            for ((_, c), got) in modes.iter().zip(&recovered) {
                prop_assert!((c - got).abs() < 1e-8, "expected {c}, got {got}");
            }

            // Resynthesize on a grid and compare pointwise.
            let xs: Vec<f64> = (0..=16).map(|i| i as f64 / 16.0).collect();
            let traces: Vec<(usize, Vec<f64>)> = modes.iter().zip(&recovered)
                .map(|((m, _), c)| (*m, vec![*c])).collect();
            let u = synthesize(&traces, &xs).unwrap();
            for (j, &x) in xs.iter().enumerate() {
                let expected = f.value(0.5, x);
                let got = if x == 0.0 || x == 1.0 { 0.0 } else { expected };
                prop_assert!((u[0][j] - got).abs() < 1e-8);
            }
        }

        // For compatible forcing the coefficient decays as the fourth-derivative
        // quadrature divided by (m pi)^4.
        #[test]
        fn decay_identity_for_compatible_forcing(scale in 0.5f64..2.0, m in 1usize..12) {
            let f = ForcingField::new(1.0, 3, 4, move |dt, dx, t, x| {
                // scale * t^4 * sin(pi x): closed-form partials
                let tpart = match dt {
                    0 => t.powi(4),
                    1 => 4.0 * t.powi(3),
                    2 => 12.0 * t * t,
                    _ => 24.0 * t,
                };
                let w = PI;
                let xpart = match dx % 4 {
                    0 => (w * x).sin(),
                    1 => (w * x).cos(),
                    2 => -(w * x).sin(),
                    _ => -(w * x).cos(),
                } * w.powi(dx as i32);
                scale * tpart * xpart
            });
            let t = 0.8;
            let fm = sine_coefficients(&f, m, t).unwrap()[m - 1];
            let (f40, _, _) = decay_factors(&f, m, t).unwrap();
            let reconstructed = f40 / (m as f64 * PI).powi(4);
            prop_assert!((fm - reconstructed).abs() <= 1e-6 * (1.0 + fm.abs()));
        }
    }
}
