//! Per-mode solution of the reduced integer-order IVP.
//!
//! For third-order reductions the characteristic cubic is classified by its
//! discriminant and the solution is assembled in closed form: exponential
//! fundamental systems plus a particular part built by variation of
//! parameters, realized as exponentially weighted cumulative quadratures of
//! the right-hand side against the impulse-response kernel. A companion-
//! matrix Runge-Kutta integrator covers general orders and doubles as a
//! cross-check oracle.

use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::cf::SampledFunction;
use crate::quad;
use crate::reduction::ModeODE;

/// Scale-aware discriminant tolerance routing to the repeated-root branch.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Default number of dense-grid steps for both solvers.
pub const DEFAULT_STEPS: usize = 1 << 14;
/// Minimum admissible step count for the companion integrator.
pub const MIN_STEPS: usize = 16;

#[derive(Debug, Error)]
pub enum TemporalError {
    #[error("closed-form solver handles third-order reductions only, got order {0}")]
    Order(usize),
    #[error("companion solver needs at least {MIN_STEPS} steps, got {0}")]
    StepCount(usize),
    #[error("fundamental matrix is numerically singular; classification does not match the roots")]
    SingularFundamentalMatrix,
    #[error("constants solve expects {expected} initial values, got {got}")]
    InitialLength { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubicCase {
    ThreeDistinctReal,
    OneRealConjugatePair,
    DoubleRoot,
    TripleRoot,
}

impl CubicCase {
    pub fn label(&self) -> &'static str {
        match self {
            CubicCase::ThreeDistinctReal => "three_distinct_real",
            CubicCase::OneRealConjugatePair => "one_real_conjugate_pair",
            CubicCase::DoubleRoot => "double_root",
            CubicCase::TripleRoot => "triple_root",
        }
    }
}

/// Discriminant, case tag, and roots of a monic cubic.
///
/// Root layout by case: three distinct real roots ascending; for the
/// conjugate-pair case `[real, a+ib, a-ib]` with `b > 0`; for the double
/// case `[repeated, repeated, simple]`; for the triple case all equal.
#[derive(Debug, Clone)]
pub struct RootClassification {
    pub discriminant: f64,
    pub case: CubicCase,
    pub roots: [Complex64; 3],
}

/// Discriminant of `mu^3 + a1 mu^2 + a2 mu + a3`, equal to the squared
/// product of root differences.
pub fn cubic_discriminant(a1: f64, a2: f64, a3: f64) -> f64 {
    -4.0 * a1.powi(3) * a3 + a1 * a1 * a2 * a2 - 4.0 * a2.powi(3) + 18.0 * a1 * a2 * a3
        - 27.0 * a3 * a3
}

fn cubic_value(a1: f64, a2: f64, a3: f64, z: Complex64) -> Complex64 {
    ((z + a1) * z + a2) * z + a3
}

fn cubic_slope(a1: f64, a2: f64, z: Complex64) -> Complex64 {
    (3.0 * z + 2.0 * a1) * z + a2
}

fn polish(a1: f64, a2: f64, a3: f64, mut z: Complex64) -> Complex64 {
    for _ in 0..2 {
        let slope = cubic_slope(a1, a2, z);
        if slope.norm() < 1e-12 * (1.0 + z.norm() * z.norm()) {
            break; // repeated root; Newton is unstable there
        }
        z -= cubic_value(a1, a2, a3, z) / slope;
    }
    z
}

/// Classify the monic cubic `mu^3 + a1 mu^2 + a2 mu + a3` by the sign of
/// its discriminant, with `|disc| <= tol * s^6` routed to the repeated-root
/// branch and the double/triple sub-case decided by pairwise root
/// distances. Each simple root gets a Newton polish.
///
/// The scale `s = max(1, |a1|, |a2|^(1/2), |a3|^(1/3))` estimates the root
/// magnitude, so the threshold carries the discriminant's sixth-power
/// dimension; comparing against powers of the raw coefficients misroutes
/// cubics whose quadratic coefficient is large, such as high spatial modes.
pub fn classify_cubic(a1: f64, a2: f64, a3: f64, tol: f64) -> RootClassification {
    let discriminant = cubic_discriminant(a1, a2, a3);
    let scale = 1.0f64
        .max(a1.abs())
        .max(a2.abs().sqrt())
        .max(a3.abs().cbrt());
    let threshold = tol * scale.powi(6);

    let shift = a1 / 3.0;
    let p = a2 - a1 * a1 / 3.0;
    let q = 2.0 * a1.powi(3) / 27.0 - a1 * a2 / 3.0 + a3;

    if discriminant.abs() <= threshold {
        // Repeated roots: the depressed cubic factors as (y-r)^2 (y+2r)
        // with r = -3q/(2p); p ~ q ~ 0 collapses to the triple root.
        let r = if p.abs() > f64::EPSILON * scale * scale {
            -1.5 * q / p
        } else {
            0.0
        };
        let gap = 3.0 * r.abs();
        let root_scale = 1.0f64.max(shift.abs()).max(r.abs());
        if gap <= 1e-6 * root_scale {
            let mu = Complex64::new(-shift, 0.0);
            return RootClassification {
                discriminant,
                case: CubicCase::TripleRoot,
                roots: [mu, mu, mu],
            };
        }
        let repeated = Complex64::new(r - shift, 0.0);
        let simple = polish(a1, a2, a3, Complex64::new(-2.0 * r - shift, 0.0));
        return RootClassification {
            discriminant,
            case: CubicCase::DoubleRoot,
            roots: [repeated, repeated, Complex64::new(simple.re, 0.0)],
        };
    }

    if discriminant > 0.0 {
        // Three distinct real roots (p < 0 here): trigonometric form.
        let amp = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * amp)).clamp(-1.0, 1.0);
        let phase = arg.acos() / 3.0;
        let mut roots = [0.0f64; 3];
        for (idx, root) in roots.iter_mut().enumerate() {
            let y = amp * (phase - 2.0 * std::f64::consts::PI * idx as f64 / 3.0).cos();
            let polished = polish(a1, a2, a3, Complex64::new(y - shift, 0.0));
            *root = polished.re;
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        return RootClassification {
            discriminant,
            case: CubicCase::ThreeDistinctReal,
            roots: roots.map(|r| Complex64::new(r, 0.0)),
        };
    }

    // One real root and a conjugate pair: Cardano with the cancellation-free
    // branch, then deflation for the quadratic factor.
    let sq = (q * q / 4.0 + p.powi(3) / 27.0).max(0.0).sqrt();
    let w = if q >= 0.0 { -q / 2.0 - sq } else { -q / 2.0 + sq };
    let u = w.cbrt();
    let v = if u != 0.0 { -p / (3.0 * u) } else { 0.0 };
    let real = polish(a1, a2, a3, Complex64::new(u + v - shift, 0.0)).re;
    let b = a1 + real;
    let c = a2 + real * b;
    let imag = (c - b * b / 4.0).max(0.0).sqrt();
    let pair = polish(a1, a2, a3, Complex64::new(-b / 2.0, imag));
    let imag = pair.im.abs().max(f64::MIN_POSITIVE);
    RootClassification {
        discriminant,
        case: CubicCase::OneRealConjugatePair,
        roots: [
            Complex64::new(real, 0.0),
            Complex64::new(pair.re, imag),
            Complex64::new(pair.re, -imag),
        ],
    }
}

// ---------------------------------------------------------------------------
// Constants from initial data
// ---------------------------------------------------------------------------

/// Columns of the fundamental matrix at `t = 0`: values and first two
/// derivatives of the case-appropriate fundamental solutions, with every
/// exponent shifted by `-shift` (pass the kernel rate to work with the
/// untransformed unknown, or zero to stay in transformed space).
fn fundamental_columns(class: &RootClassification, shift: f64) -> [[f64; 3]; 3] {
    match class.case {
        CubicCase::ThreeDistinctReal => {
            let mut cols = [[0.0; 3]; 3];
            for (j, root) in class.roots.iter().enumerate() {
                let nu = root.re - shift;
                cols[j] = [1.0, nu, nu * nu];
            }
            cols
        }
        CubicCase::OneRealConjugatePair => {
            let nu = class.roots[0].re - shift;
            let a = class.roots[1].re - shift;
            let b = class.roots[1].im;
            [
                [1.0, nu, nu * nu],
                [1.0, a, a * a - b * b],
                [0.0, b, 2.0 * a * b],
            ]
        }
        CubicCase::DoubleRoot => {
            let nu = class.roots[0].re - shift;
            let nu3 = class.roots[2].re - shift;
            [
                [1.0, nu, nu * nu],
                [0.0, 1.0, 2.0 * nu],
                [1.0, nu3, nu3 * nu3],
            ]
        }
        CubicCase::TripleRoot => {
            let nu = class.roots[0].re - shift;
            [[1.0, nu, nu * nu], [0.0, 1.0, 2.0 * nu], [0.0, 0.0, 2.0]]
        }
    }
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Result<[f64; 3], TemporalError> {
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() <= 1e-13 * scale {
            return Err(TemporalError::SingularFundamentalMatrix);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for c in col..3 {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for c in row + 1..3 {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

/// Solve for the homogeneous constants `C_1..C_3` from the initial data and
/// the particular solution's contribution `d` at `t = 0`. The fundamental
/// exponents are shifted by the kernel rate `beta`, matching the
/// untransformed unknown.
pub fn solve_constants(
    class: &RootClassification,
    beta: f64,
    initial: &[f64],
    d: &[f64],
) -> Result<[f64; 3], TemporalError> {
    if initial.len() != 3 || d.len() != 3 {
        return Err(TemporalError::InitialLength {
            expected: 3,
            got: initial.len().min(d.len()),
        });
    }
    let cols = fundamental_columns(class, beta);
    let mut a = [[0.0; 3]; 3];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..3 {
            a[i][j] = col[i];
        }
    }
    let rhs = [
        initial[0] - d[0],
        initial[1] - d[1],
        initial[2] - d[2],
    ];
    solve3(a, rhs)
}

// ---------------------------------------------------------------------------
// Kernel terms: P(tau) e^{mu tau} closed under differentiation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct KernelTerm {
    mu: Complex64,
    poly: [Complex64; 3],
}

fn differentiate_terms(terms: &[KernelTerm]) -> Vec<KernelTerm> {
    terms
        .iter()
        .map(|t| KernelTerm {
            mu: t.mu,
            poly: [
                t.poly[1] + t.mu * t.poly[0],
                2.0 * t.poly[2] + t.mu * t.poly[1],
                t.mu * t.poly[2],
            ],
        })
        .collect()
}

/// Impulse-response kernel of the monic cubic: `h(0) = h'(0) = 0`,
/// `h''(0) = 1`, so the particular solution and its first two derivatives
/// all vanish at the base point.
fn particular_kernel(class: &RootClassification) -> Vec<KernelTerm> {
    let zero = Complex64::new(0.0, 0.0);
    match class.case {
        CubicCase::ThreeDistinctReal | CubicCase::OneRealConjugatePair => {
            let roots = class.roots;
            roots
                .iter()
                .map(|&mu| {
                    let dp: Complex64 = roots
                        .iter()
                        .filter(|&&other| other != mu)
                        .map(|&other| mu - other)
                        .product();
                    KernelTerm {
                        mu,
                        poly: [dp.inv(), zero, zero],
                    }
                })
                .collect()
        }
        CubicCase::DoubleRoot => {
            let mu1 = class.roots[0];
            let mu3 = class.roots[2];
            let delta = mu1 - mu3;
            let d2 = (delta * delta).inv();
            vec![
                KernelTerm {
                    mu: mu3,
                    poly: [d2, zero, zero],
                },
                KernelTerm {
                    mu: mu1,
                    poly: [-d2, delta.inv(), zero],
                },
            ]
        }
        CubicCase::TripleRoot => vec![KernelTerm {
            mu: class.roots[0],
            poly: [zero, zero, Complex64::new(0.5, 0.0)],
        }],
    }
}

/// Homogeneous part as kernel terms weighted by the solved constants; the
/// conjugate-pair case folds `C_2 cos + C_3 sin` into one complex weight
/// under the take-real-part convention.
fn homogeneous_terms(class: &RootClassification, c: &[f64; 3]) -> Vec<KernelTerm> {
    let zero = Complex64::new(0.0, 0.0);
    match class.case {
        CubicCase::ThreeDistinctReal => class
            .roots
            .iter()
            .zip(c)
            .map(|(&mu, &w)| KernelTerm {
                mu,
                poly: [Complex64::new(w, 0.0), zero, zero],
            })
            .collect(),
        CubicCase::OneRealConjugatePair => vec![
            KernelTerm {
                mu: class.roots[0],
                poly: [Complex64::new(c[0], 0.0), zero, zero],
            },
            KernelTerm {
                mu: class.roots[1],
                poly: [Complex64::new(c[1], -c[2]), zero, zero],
            },
        ],
        CubicCase::DoubleRoot => vec![
            KernelTerm {
                mu: class.roots[0],
                poly: [Complex64::new(c[0], 0.0), Complex64::new(c[1], 0.0), zero],
            },
            KernelTerm {
                mu: class.roots[2],
                poly: [Complex64::new(c[2], 0.0), zero, zero],
            },
        ],
        CubicCase::TripleRoot => vec![KernelTerm {
            mu: class.roots[0],
            poly: [
                Complex64::new(c[0], 0.0),
                Complex64::new(c[1], 0.0),
                Complex64::new(c[2], 0.0),
            ],
        }],
    }
}

// ---------------------------------------------------------------------------
// Solution representation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    ClosedForm,
    Companion,
}

impl SolverKind {
    pub fn label(&self) -> &'static str {
        match self {
            SolverKind::ClosedForm => "closed-form",
            SolverKind::Companion => "companion",
        }
    }
}

struct JTable {
    mu: Complex64,
    /// `prefix[r][i] = integral_0^{t_i} z^r g(z) e^{mu (t_i - z)} dz`.
    prefix: [Vec<Complex64>; 3],
}

struct ClosedFormRepr {
    h: f64,
    steps: usize,
    /// Derivative levels 0..2 of homogeneous and particular kernel terms.
    hom: [Vec<KernelTerm>; 3],
    part: [Vec<KernelTerm>; 3],
    tables: Vec<JTable>,
    /// `z^r g(z)` samples shared by every table.
    weighted_samples: [Vec<f64>; 3],
    rhs: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    coeffs: Vec<f64>,
}

impl ClosedFormRepr {
    fn j_eval(&self, table: &JTable, r: usize, t: f64) -> Complex64 {
        let i = ((t / self.h).floor() as usize).min(self.steps - 1);
        let ti = i as f64 * self.h;
        let dt = t - ti;
        if dt == 0.0 {
            return table.prefix[r][i];
        }
        let e = (table.mu * dt).exp();
        let gi = self.weighted_samples[r][i];
        let gt = (self.rhs)(t) * t.powi(r as i32);
        e * table.prefix[r][i] + 0.5 * dt * (gi * e + gt)
    }

    fn terms_value(&self, terms: &[KernelTerm], t: f64, particular: bool) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for term in terms {
            if particular {
                let table = self
                    .tables
                    .iter()
                    .find(|tb| tb.mu == term.mu)
                    .expect("kernel term without prefix table");
                // P(t - z) expanded in powers of z against the prefix table.
                for (r, &coeff) in term.poly.iter().enumerate() {
                    if coeff == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let mut binom = 1.0;
                    for s in 0..=r {
                        let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
                        let j = self.j_eval(table, s, t);
                        acc += coeff * binom * sign * t.powi((r - s) as i32) * j;
                        binom = binom * (r - s) as f64 / (s + 1) as f64;
                    }
                }
            } else {
                let poly = term.poly[0] + t * (term.poly[1] + t * term.poly[2]);
                acc += poly * (term.mu * t).exp();
            }
        }
        acc.re
    }

    fn transformed_state(&self, t: f64) -> [f64; 4] {
        let mut state = [0.0; 4];
        for level in 0..3 {
            state[level] =
                self.terms_value(&self.hom[level], t, false) + self.terms_value(&self.part[level], t, true);
        }
        let mut top = (self.rhs)(t);
        for j in 0..3 {
            top -= self.coeffs[j] * state[j];
        }
        state[3] = top;
        state
    }
}

struct DenseRepr {
    h: f64,
    steps: usize,
    order: usize,
    /// `states[i]` holds the transformed derivatives 0..order-1 at node i.
    states: Vec<Vec<f64>>,
    /// Slope of the top stored component at each node, from the ODE.
    top: Vec<f64>,
    rhs: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    coeffs: Vec<f64>,
}

impl DenseRepr {
    fn transformed_state(&self, t: f64) -> Vec<f64> {
        let i = ((t / self.h).floor() as usize).min(self.steps - 1);
        let s = (t - i as f64 * self.h) / self.h;
        let s2 = s * s;
        let s3 = s2 * s;
        let (h00, h10, h01, h11) = (
            2.0 * s3 - 3.0 * s2 + 1.0,
            s3 - 2.0 * s2 + s,
            -2.0 * s3 + 3.0 * s2,
            s3 - s2,
        );
        let mut state = vec![0.0; self.order + 1];
        for j in 0..self.order {
            let y0 = self.states[i][j];
            let y1 = self.states[i + 1][j];
            let d0 = if j + 1 < self.order {
                self.states[i][j + 1]
            } else {
                self.top[i]
            };
            let d1 = if j + 1 < self.order {
                self.states[i + 1][j + 1]
            } else {
                self.top[i + 1]
            };
            state[j] = y0 * h00 + d0 * self.h * h10 + y1 * h01 + d1 * self.h * h11;
        }
        let mut topv = (self.rhs)(t);
        for j in 0..self.order {
            topv -= self.coeffs[j] * state[j];
        }
        state[self.order] = topv;
        state
    }
}

enum Repr {
    Closed(ClosedFormRepr),
    Dense(DenseRepr),
}

/// One mode's temporal solution `T_m(t)` on `[0, q]`, with derivatives up
/// to the ODE order available everywhere.
#[derive(Clone)]
pub struct TemporalSolution {
    pub m: usize,
    pub classification: Option<RootClassification>,
    pub constants: Vec<f64>,
    pub provenance: SolverKind,
    beta: f64,
    q: f64,
    order: usize,
    repr: Arc<Repr>,
}

impl TemporalSolution {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn horizon(&self) -> f64 {
        self.q
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn transformed_state(&self, t: f64) -> Vec<f64> {
        match self.repr.as_ref() {
            Repr::Closed(c) => c.transformed_state(t).to_vec(),
            Repr::Dense(d) => d.transformed_state(t),
        }
    }

    /// Transformed derivative `T~^(j)(t)`, `j <= order`.
    pub fn transformed(&self, j: usize, t: f64) -> f64 {
        debug_assert!(j <= self.order);
        self.transformed_state(t)[j]
    }

    /// Solution derivative `T_m^(j)(t)`, `j <= order`, mapped back through
    /// the inverse exponential transform by the product rule.
    pub fn eval_deriv(&self, j: usize, t: f64) -> f64 {
        debug_assert!(j <= self.order);
        let state = self.transformed_state(t);
        let mut neg_beta_pow = vec![1.0; j + 1];
        for d in 1..=j {
            neg_beta_pow[d] = neg_beta_pow[d - 1] * (-self.beta);
        }
        let mut acc = 0.0;
        let mut binom = 1.0;
        for i in 0..=j {
            acc += binom * neg_beta_pow[j - i] * state[i];
            binom = binom * (j - i) as f64 / (i + 1) as f64;
        }
        acc * (-self.beta * t).exp()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_deriv(0, t)
    }

    /// Max of `|T_m|` over a uniform scan of `[0, q]`.
    pub fn sup_abs(&self, samples: usize) -> f64 {
        let n = samples.max(2);
        (0..=n)
            .map(|i| self.eval(self.q * i as f64 / n as f64).abs())
            .fold(0.0, f64::max)
    }

    /// View the solution as a time function for the kernel-quadrature
    /// oracle, exposing derivatives up to the ODE order.
    pub fn as_sampled(&self, panels: usize) -> SampledFunction {
        let this = self.clone();
        SampledFunction::new(0.0, self.order, move |j, t| this.eval_deriv(j, t))
            .with_panels(panels)
    }
}

// ---------------------------------------------------------------------------
// Solvers
// ---------------------------------------------------------------------------

/// Closed-form solve of a third-order reduction: case-appropriate
/// fundamental system plus variation-of-parameters particular part, with
/// constants matched to the transformed initial data by a direct linear
/// solve. The particular part vanishes with its first two derivatives at
/// `t = 0`, so the constants see the initial data exactly.
pub fn solve_mode_closed_form(
    ode: &ModeODE,
    class: &RootClassification,
) -> Result<TemporalSolution, TemporalError> {
    solve_mode_closed_form_with_steps(ode, class, DEFAULT_STEPS)
}

pub fn solve_mode_closed_form_with_steps(
    ode: &ModeODE,
    class: &RootClassification,
    steps: usize,
) -> Result<TemporalSolution, TemporalError> {
    if ode.order != 3 {
        return Err(TemporalError::Order(ode.order));
    }
    let steps = steps.max(2);
    let h = ode.q / steps as f64;
    let rhs = Arc::clone(&ode.rhs);

    // Prefix tables over the dense grid for every distinct kernel exponent.
    let g_samples: Vec<f64> = (0..=steps).map(|i| (rhs)(i as f64 * h)).collect();
    let weighted_samples: [Vec<f64>; 3] = [
        g_samples.clone(),
        g_samples
            .iter()
            .enumerate()
            .map(|(i, g)| g * (i as f64 * h))
            .collect(),
        g_samples
            .iter()
            .enumerate()
            .map(|(i, g)| g * (i as f64 * h).powi(2))
            .collect(),
    ];
    let part0 = particular_kernel(class);
    let mut tables: Vec<JTable> = Vec::new();
    for term in &part0 {
        if tables.iter().any(|tb| tb.mu == term.mu) {
            continue;
        }
        let prefix = [
            quad::weighted_prefix(&weighted_samples[0], h, term.mu),
            quad::weighted_prefix(&weighted_samples[1], h, term.mu),
            quad::weighted_prefix(&weighted_samples[2], h, term.mu),
        ];
        tables.push(JTable {
            mu: term.mu,
            prefix,
        });
    }

    // The particular part has zero value and derivatives at t = 0 by
    // construction, so d = 0 and the constants match the transformed data.
    let d = [0.0; 3];
    let constants = {
        let cols = fundamental_columns(class, 0.0);
        let mut a = [[0.0; 3]; 3];
        for (j, col) in cols.iter().enumerate() {
            for i in 0..3 {
                a[i][j] = col[i];
            }
        }
        let init = &ode.initial_transformed;
        if init.len() != 3 {
            return Err(TemporalError::InitialLength {
                expected: 3,
                got: init.len(),
            });
        }
        solve3(a, [init[0] - d[0], init[1] - d[1], init[2] - d[2]])?
    };

    let hom0 = homogeneous_terms(class, &constants);
    let hom1 = differentiate_terms(&hom0);
    let hom2 = differentiate_terms(&hom1);
    let part1 = differentiate_terms(&part0);
    let part2 = differentiate_terms(&part1);

    let repr = ClosedFormRepr {
        h,
        steps,
        hom: [hom0, hom1, hom2],
        part: [part0, part1, part2],
        tables,
        weighted_samples,
        rhs,
        coeffs: ode.coeffs.clone(),
    };
    Ok(TemporalSolution {
        m: ode.m,
        classification: Some(class.clone()),
        constants: constants.to_vec(),
        provenance: SolverKind::ClosedForm,
        beta: ode.beta,
        q: ode.q,
        order: ode.order,
        repr: Arc::new(Repr::Closed(repr)),
    })
}

/// Companion matrix of a monic ODE with ascending coefficients
/// `B_0..B_{n}` (`B_n = 1`): shift rows above, negated lower coefficients
/// in the last row. Its eigenvalues are the characteristic roots.
pub fn companion_matrix(coeffs: &[f64]) -> Vec<Vec<f64>> {
    let n = coeffs.len() - 1;
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in m.iter_mut().enumerate().take(n - 1) {
        row[i + 1] = 1.0;
    }
    for j in 0..n {
        m[n - 1][j] = -coeffs[j];
    }
    m
}

/// General-order solve: rewrite as a first-order system with the companion
/// matrix and integrate with the classical fourth-order one-step method at
/// fixed step `q / steps`; dense output by cubic Hermite interpolation of
/// the stored states.
pub fn solve_mode_companion(ode: &ModeODE) -> Result<TemporalSolution, TemporalError> {
    solve_mode_companion_with_steps(ode, DEFAULT_STEPS)
}

pub fn solve_mode_companion_with_steps(
    ode: &ModeODE,
    steps: usize,
) -> Result<TemporalSolution, TemporalError> {
    if steps < MIN_STEPS {
        return Err(TemporalError::StepCount(steps));
    }
    let order = ode.order;
    if ode.initial_transformed.len() != order {
        return Err(TemporalError::InitialLength {
            expected: order,
            got: ode.initial_transformed.len(),
        });
    }
    let h = ode.q / steps as f64;
    let rhs = Arc::clone(&ode.rhs);
    let coeffs = ode.coeffs.clone();

    let deriv = |t: f64, y: &[f64], out: &mut [f64]| {
        for j in 0..order - 1 {
            out[j] = y[j + 1];
        }
        let mut top = (rhs)(t);
        for j in 0..order {
            top -= coeffs[j] * y[j];
        }
        out[order - 1] = top;
    };

    let mut states = Vec::with_capacity(steps + 1);
    let mut top = Vec::with_capacity(steps + 1);
    let mut y = ode.initial_transformed.clone();
    let mut k1 = vec![0.0; order];
    let mut k2 = vec![0.0; order];
    let mut k3 = vec![0.0; order];
    let mut k4 = vec![0.0; order];
    let mut stage = vec![0.0; order];

    deriv(0.0, &y, &mut k1);
    states.push(y.clone());
    top.push(k1[order - 1]);

    for i in 0..steps {
        let t = i as f64 * h;
        deriv(t, &y, &mut k1);
        for j in 0..order {
            stage[j] = y[j] + 0.5 * h * k1[j];
        }
        deriv(t + 0.5 * h, &stage, &mut k2);
        for j in 0..order {
            stage[j] = y[j] + 0.5 * h * k2[j];
        }
        deriv(t + 0.5 * h, &stage, &mut k3);
        for j in 0..order {
            stage[j] = y[j] + h * k3[j];
        }
        deriv(t + h, &stage, &mut k4);
        for j in 0..order {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        deriv(t + h, &y, &mut k1);
        states.push(y.clone());
        top.push(k1[order - 1]);
    }

    let repr = DenseRepr {
        h,
        steps,
        order,
        states,
        top,
        rhs: Arc::clone(&ode.rhs),
        coeffs: ode.coeffs.clone(),
    };
    Ok(TemporalSolution {
        m: ode.m,
        classification: None,
        constants: Vec::new(),
        provenance: SolverKind::Companion,
        beta: ode.beta,
        q: ode.q,
        order,
        repr: Arc::new(Repr::Dense(repr)),
    })
}
