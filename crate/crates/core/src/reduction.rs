//! Reduction of each modal fractional initial value problem to an
//! integer-order linear constant-coefficient IVP in the transformed unknown
//! `T~(t) = T(t) e^{beta t}`.
//!
//! Substituting the integration-by-parts expansion into the modal equation,
//! multiplying by `(1-alpha) e^{beta t}`, rewriting in `T~` via the binomial
//! identity, and differentiating once in `t` yields an ODE of order `k+1`
//! whose coefficients are produced here in monic form.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::cf::FractionalOrder;
use crate::spectral::{ForcingField, ModalCoefficients, SpectralError};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("leading coefficient lambda_k must be nonzero")]
    LeadingLambdaZero,
    #[error("lambda vector must have k+1 = {expected} entries, got {got}")]
    LambdaLength { expected: usize, got: usize },
    #[error("horizon q must be positive, got {0}")]
    NonPositiveHorizon(f64),
    #[error("mode truncation must be at least 1")]
    NoModes,
    #[error("initial data for mode {m} must have k+1 = {expected} entries, got {got}")]
    InitialLength {
        m: usize,
        expected: usize,
        got: usize,
    },
    #[error("initial data given for mode {m} beyond the truncation {modes}")]
    InitialModeOutOfRange { m: usize, modes: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Per-mode initial data `T_m^(i)(0) = C_i`, `i = 0..k`. Modes without an
/// explicit vector use zeros.
#[derive(Debug, Clone, Default)]
pub enum InitialData {
    #[default]
    Zero,
    PerMode(BTreeMap<usize, Vec<f64>>),
}

impl InitialData {
    pub fn for_mode(&self, m: usize, k: usize) -> Vec<f64> {
        match self {
            InitialData::Zero => vec![0.0; k + 1],
            InitialData::PerMode(map) => {
                map.get(&m).cloned().unwrap_or_else(|| vec![0.0; k + 1])
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            InitialData::Zero => true,
            InitialData::PerMode(map) => map.values().flatten().all(|v| *v == 0.0),
        }
    }
}

/// Grid and quadrature resolutions used along the solve path. The defaults
/// are deliberate: fixed, deterministic, and fine enough for the residual
/// tolerances shipped with the verifier.
#[derive(Debug, Clone)]
pub struct Numerics {
    /// Panels for the kernel quadrature used by the verification oracle.
    pub quad_panels: usize,
    /// Steps of the dense time grid used by both mode solvers.
    pub ode_steps: usize,
    /// Panels of the modal-coefficient sampling grid in `t`.
    pub modal_samples: usize,
    /// Number of time nodes at which residuals are scanned.
    pub residual_nodes: usize,
    /// Output grid panel counts (nt rows, nx columns).
    pub nt: usize,
    pub nx: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            quad_panels: 1 << 12,
            ode_steps: 1 << 14,
            modal_samples: 512,
            residual_nodes: 32,
            nt: 64,
            nx: 64,
        }
    }
}

/// Full problem description: fractional order, the multi-term coefficients
/// `lambda_0..lambda_k`, horizon, forcing, initial data, and truncation.
pub struct ProblemSpec {
    pub order: FractionalOrder,
    pub k: usize,
    pub lambdas: Vec<f64>,
    pub q: f64,
    pub forcing: ForcingField,
    pub initial: InitialData,
    pub modes: usize,
    pub numerics: Numerics,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.lambdas.len() != self.k + 1 {
            return Err(ProblemError::LambdaLength {
                expected: self.k + 1,
                got: self.lambdas.len(),
            });
        }
        if self.lambdas[self.k] == 0.0 {
            return Err(ProblemError::LeadingLambdaZero);
        }
        if !(self.q > 0.0) {
            return Err(ProblemError::NonPositiveHorizon(self.q));
        }
        if self.modes == 0 {
            return Err(ProblemError::NoModes);
        }
        if let InitialData::PerMode(map) = &self.initial {
            for (m, vec) in map {
                if *m == 0 || *m > self.modes {
                    return Err(ProblemError::InitialModeOutOfRange {
                        m: *m,
                        modes: self.modes,
                    });
                }
                if vec.len() != self.k + 1 {
                    return Err(ProblemError::InitialLength {
                        m: *m,
                        expected: self.k + 1,
                        got: vec.len(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.order.beta()
    }
}

/// The reduced integer-order IVP for one mode: monic coefficient vector,
/// transformed right-hand side, and transformed initial values.
pub struct ModeODE {
    pub m: usize,
    /// ODE order `k+1`.
    pub order: usize,
    /// Ascending coefficients `B_0..B_{k+1}` of `sum B_j T~^(j) = g`,
    /// normalized so the leading entry is exactly 1.
    pub coeffs: Vec<f64>,
    /// Normalized right-hand side evaluator on `[0, q]`.
    pub rhs: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// `T~^(j)(0)`, `j = 0..k`.
    pub initial_transformed: Vec<f64>,
    pub beta: f64,
    pub q: f64,
}

/// Unnormalized coefficients of the reduced ODE, ascending in derivative
/// order, built by the nested expansion sums (outer n over terms, middle i
/// over kernel powers, inner binomial j) followed by the single time
/// differentiation that shifts every bracket term up one order.
fn raw_coefficients(alpha: f64, lambdas: &[f64], m: usize) -> Vec<f64> {
    let beta = alpha / (1.0 - alpha);
    let k = lambdas.len() - 1;
    // (-beta)^d by iterated multiplication to keep signs exact.
    let mut neg_beta_pow = vec![1.0; k + 2];
    for d in 1..=k + 1 {
        neg_beta_pow[d] = neg_beta_pow[d - 1] * (-beta);
    }
    let mut coeffs = vec![0.0; k + 2];
    for (n, lambda) in lambdas.iter().enumerate() {
        for i in 0..=n {
            // binomial expansion of T^(n-i) e^{beta t} in terms of T~^(j);
            // the single time differentiation moved every bracket term
            // T~^(j) up to T~^(j+1).
            let r = n - i;
            let mut binom = 1.0;
            for j in 0..=r {
                coeffs[j + 1] += lambda * neg_beta_pow[i] * binom * neg_beta_pow[r - j];
                binom = binom * (r - j) as f64 / (j + 1) as f64;
            }
        }
        // The integral term differentiates to (-beta)^{n+1} T~.
        coeffs[0] += lambda * neg_beta_pow[n + 1];
    }
    // (m pi)^2 (1-alpha) T~ differentiates onto T~'.
    let mpi = m as f64 * std::f64::consts::PI;
    coeffs[1] += mpi * mpi * (1.0 - alpha);
    coeffs
}

/// Monic coefficient vector `B_0..B_{k+1}` of the reduced ODE for mode `m`
/// (ascending derivative order, last entry exactly 1). For `k = 2` the
/// trailing three entries reproduce the cubic coefficients `A_3, A_2, A_1`.
pub fn transform_coefficients(spec: &ProblemSpec, m: usize) -> Result<Vec<f64>, ProblemError> {
    spec.validate()?;
    let mut coeffs = raw_coefficients(spec.order.alpha(), &spec.lambdas, m);
    let lead = *coeffs.last().unwrap();
    for c in coeffs.iter_mut() {
        *c /= lead;
    }
    *coeffs.last_mut().unwrap() = 1.0;
    Ok(coeffs)
}

/// Leading unnormalized coefficient of the reduced ODE. Equals `lambda_k`
/// for `k >= 1`; for `k = 0` the undifferentiated `(m pi)^2 (1-alpha)` term
/// also lands on the leading derivative.
pub fn leading_coefficient(spec: &ProblemSpec, m: usize) -> f64 {
    *raw_coefficients(spec.order.alpha(), &spec.lambdas, m)
        .last()
        .unwrap()
}

/// Transformed right-hand side
/// `[alpha f_m(t) + (1-alpha) f_m'(t)] e^{beta t}`, normalized by the same
/// leading coefficient as [`transform_coefficients`].
pub fn transformed_rhs(
    spec: &ProblemSpec,
    fm: &ModalCoefficients,
    t: f64,
) -> Result<f64, ProblemError> {
    let alpha = spec.order.alpha();
    let beta = spec.beta();
    let value = fm.value(t);
    let slope = fm.derivative(t)?;
    let lead = leading_coefficient(spec, fm.m);
    Ok((alpha * value + (1.0 - alpha) * slope) * (beta * t).exp() / lead)
}

/// Map initial data through the exponential transform:
/// `T~^(j)(0) = sum_i binom(j,i) beta^{j-i} C_i` (product rule on `T e^{beta t}`).
///
/// The map is lower triangular with unit diagonal; its inverse is the same
/// map with `-beta`.
pub fn transform_initial_conditions(c: &[f64], beta: f64) -> Vec<f64> {
    let k = c.len();
    // beta powers by iterated multiplication; beta^0 = 1 even when beta = 0.
    let mut pow = vec![1.0; k];
    for d in 1..k {
        pow[d] = pow[d - 1] * beta;
    }
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let mut acc = 0.0;
        let mut binom = 1.0;
        for i in 0..=j {
            acc += binom * pow[j - i] * c[i];
            binom = binom * (j - i) as f64 / (i + 1) as f64;
        }
        out.push(acc);
    }
    out
}

/// Undo the exponential transform pointwise: `T(t) = value * e^{-beta t}`.
pub fn inverse_transform(value: f64, beta: f64, t: f64) -> f64 {
    value * (-beta * t).exp()
}

/// Assemble the reduced IVP for one mode from the problem description and
/// its modal forcing coefficients.
pub fn reduce_mode(spec: &ProblemSpec, fm: Arc<ModalCoefficients>) -> Result<ModeODE, ProblemError> {
    let m = fm.m;
    let coeffs = transform_coefficients(spec, m)?;
    let beta = spec.beta();
    let alpha = spec.order.alpha();
    let lead = leading_coefficient(spec, m);
    let initial = spec.initial.for_mode(m, spec.k);
    if initial.len() != spec.k + 1 {
        return Err(ProblemError::InitialLength {
            m,
            expected: spec.k + 1,
            got: initial.len(),
        });
    }
    let initial_transformed = transform_initial_conditions(&initial, beta);
    let rhs_fm = Arc::clone(&fm);
    let rhs = Arc::new(move |t: f64| {
        let value = rhs_fm.value(t);
        let slope = rhs_fm.derivative(t).unwrap_or(f64::NAN);
        (alpha * value + (1.0 - alpha) * slope) * (beta * t).exp() / lead
    });
    Ok(ModeODE {
        m,
        order: spec.k + 1,
        coeffs,
        rhs,
        initial_transformed,
        beta,
        q: spec.q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::FractionalOrder;
    use crate::spectral::ForcingField;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn spec_k2(alpha: f64, lambdas: [f64; 3], modes: usize) -> ProblemSpec {
        ProblemSpec {
            order: FractionalOrder::new(alpha).unwrap(),
            k: 2,
            lambdas: lambdas.to_vec(),
            q: 1.0,
            forcing: ForcingField::zero(1.0),
            initial: InitialData::Zero,
            modes,
            numerics: Numerics::default(),
        }
    }

    /// Cubic coefficients written out explicitly for k = 2, used as the
    /// independent oracle for the nested-sum generator.
    fn cubic_reference(alpha: f64, l: [f64; 3], m: usize) -> (f64, f64, f64) {
        let beta = alpha / (1.0 - alpha);
        let mpi2 = (m as f64 * PI).powi(2);
        let a1 = -3.0 * beta + l[1] / l[2];
        let a2 = 3.0 * beta * beta + (l[0] - 2.0 * beta * l[1] + mpi2 * (1.0 - alpha)) / l[2];
        let a3 = -beta.powi(3) + (beta * beta * l[1] - beta * l[0]) / l[2];
        (a1, a2, a3)
    }

    #[test]
    fn k2_example_coefficients() {
        let spec = spec_k2(0.5, [0.0, 0.0, 1.0], 4);
        let b = transform_coefficients(&spec, 1).unwrap();
        assert_eq!(b.len(), 4);
        assert_eq!(b[3], 1.0);
        // Descending order (1, A1, A2, A3) = (1, -3, 3 + pi^2/2, -1).
        assert!((b[2] - (-3.0)).abs() < 1e-12);
        assert!((b[1] - (3.0 + PI * PI / 2.0)).abs() < 1e-12);
        assert!((b[0] - (-1.0)).abs() < 1e-12);
        assert!((b[1] - 7.934802).abs() < 1e-6);
    }

    #[test]
    fn k2_matches_reference_on_grid() {
        for &alpha in &[0.1, 0.35, 0.5, 0.75, 0.9] {
            for &l in &[[0.0, 0.0, 1.0], [1.0, 1.0, 1.0], [0.4, -0.7, 2.5], [-1.0, 0.3, -0.8]] {
                for &m in &[1usize, 2, 5, 17] {
                    let spec = spec_k2(alpha, l, 32);
                    let b = transform_coefficients(&spec, m).unwrap();
                    let (a1, a2, a3) = cubic_reference(alpha, l, m);
                    let scale = |v: f64| 1e-12 * (1.0 + v.abs());
                    assert!((b[2] - a1).abs() <= scale(a1));
                    assert!((b[1] - a2).abs() <= scale(a2));
                    assert!((b[0] - a3).abs() <= scale(a3));
                }
            }
        }
    }

    #[test]
    fn mode_dependence_sits_in_a2_only() {
        let spec = spec_k2(0.3, [0.2, -0.4, 1.5], 64);
        let b1 = transform_coefficients(&spec, 1).unwrap();
        let b9 = transform_coefficients(&spec, 9).unwrap();
        assert!((b1[2] - b9[2]).abs() < 1e-14);
        assert!((b1[0] - b9[0]).abs() < 1e-14);
        let expected_gap = ((9.0 * PI).powi(2) - PI.powi(2)) * (1.0 - 0.3) / 1.5;
        assert!((b9[1] - b1[1] - expected_gap).abs() < 1e-9);
    }

    #[test]
    fn k0_reduction_from_first_principles() {
        // For k = 0 the undifferentiated (m pi)^2 (1-alpha) term joins the
        // leading derivative: (lambda_0 + (m pi)^2 (1-alpha)) T~' - lambda_0 beta T~ = g.
        let alpha = 0.5;
        let spec = ProblemSpec {
            order: FractionalOrder::new(alpha).unwrap(),
            k: 0,
            lambdas: vec![1.0],
            q: 1.0,
            forcing: ForcingField::zero(1.0),
            initial: InitialData::Zero,
            modes: 4,
            numerics: Numerics::default(),
        };
        let m = 1usize;
        let beta = alpha / (1.0 - alpha);
        let lead = 1.0 + (m as f64 * PI).powi(2) * (1.0 - alpha);
        let b = transform_coefficients(&spec, m).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[1], 1.0);
        assert!((b[0] - (-beta / lead)).abs() < 1e-14);
        assert!((leading_coefficient(&spec, m) - lead).abs() < 1e-14);
    }

    #[test]
    fn leading_lambda_zero_rejected() {
        let spec = spec_k2(0.5, [0.0, 1.0, 0.0], 4);
        assert!(matches!(
            transform_coefficients(&spec, 1),
            Err(ProblemError::LeadingLambdaZero)
        ));
    }

    #[test]
    fn initial_condition_transform_examples() {
        assert_eq!(
            transform_initial_conditions(&[0.0, 0.0, 0.0], 1.0),
            vec![0.0, 0.0, 0.0]
        );
        assert_eq!(
            transform_initial_conditions(&[1.0, 0.0, 0.0], 1.0),
            vec![1.0, 1.0, 1.0]
        );
        assert_eq!(
            transform_initial_conditions(&[0.0, 1.0, 0.0], 1.0),
            vec![0.0, 1.0, 2.0]
        );
    }

    #[test]
    fn inverse_transform_examples() {
        assert_eq!(inverse_transform(1.0, 1.0, 0.0), 1.0);
        assert!((inverse_transform(std::f64::consts::E, 1.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((inverse_transform(2.5, 0.25, 2.0) - 1.516327).abs() < 1e-6);
    }

    #[test]
    fn transformed_rhs_examples() {
        let spec = spec_k2(0.5, [0.0, 0.0, 1.0], 4);
        let zero = ModalCoefficients::from_closures(1, |_| 0.0, Some(Arc::new(|_| 0.0)), None);
        assert_eq!(transformed_rhs(&spec, &zero, 0.7).unwrap(), 0.0);

        // f_m(t) = t: [alpha t + (1-alpha)] e^{beta t}
        let ramp = ModalCoefficients::from_closures(1, |t| t, Some(Arc::new(|_| 1.0)), None);
        let at0 = transformed_rhs(&spec, &ramp, 0.0).unwrap();
        assert!((at0 - 0.5).abs() < 1e-15);
        let at1 = transformed_rhs(&spec, &ramp, 1.0).unwrap();
        assert!((at1 - std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn rhs_requires_derivative_trace() {
        let spec = spec_k2(0.5, [0.0, 0.0, 1.0], 4);
        let no_slope = ModalCoefficients::from_closures(1, |t| t, None, None);
        assert!(matches!(
            transformed_rhs(&spec, &no_slope, 0.5),
            Err(ProblemError::Spectral(SpectralError::MissingDerivativeTrace))
        ));
    }

    proptest! {
        // The binomial transform with -beta inverts the one with beta.
        #[test]
        fn initial_condition_transform_round_trips(
            c in proptest::collection::vec(-3.0f64..3.0, 1..6),
            beta in -10.0f64..10.0,
        ) {
            let forward = transform_initial_conditions(&c, beta);
            let back = transform_initial_conditions(&forward, -beta);
            // Cancellation is bounded by the intermediate magnitude, which
            // the triangular map amplifies by up to beta^k.
            let scale = forward.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
            for (orig, round) in c.iter().zip(&back) {
                prop_assert!((orig - round).abs() <= 1e-12 * scale);
            }
        }
    }
}
