//! Spectral solver for multi-term time-fractional heat equations with the
//! exponential-kernel (Caputo-Fabrizio) derivative in time.
//!
//! The equation `sum_n lambda_n D^(alpha+n) u - u_xx = f` on the unit
//! interval with homogeneous Dirichlet data is separated into sine modes;
//! each modal fractional IVP is reduced to an integer-order linear ODE by
//! an exponential transform and solved either in closed form (third-order
//! reductions, classified by the characteristic cubic's discriminant) or by
//! a companion-matrix integrator. An independent kernel-quadrature operator
//! plugs the computed solutions back into the fractional equation to
//! certify residuals.
//!
//! Entry points: [`pipeline::solve_problem`] for the whole pipeline,
//! [`config::parse_config`] for the CLI's file format, and the per-module
//! primitives for direct use.

pub mod cf;
pub mod config;
pub mod expr;
pub mod pipeline;
pub mod quad;
pub mod reduction;
pub mod report;
pub mod spectral;
pub mod temporal;
pub mod verify;

pub use cf::{cf_derivative, cf_derivative_higher, cf_expansion, FractionalOrder, SampledFunction};
pub use expr::Expr;
pub use pipeline::{solve_problem, SolutionGrid, SolveOptions, SolveOutput, SolverChoice};
pub use reduction::{InitialData, ModeODE, Numerics, ProblemSpec};
pub use spectral::{ForcingField, ModalCoefficients};
pub use temporal::{
    classify_cubic, solve_constants, solve_mode_closed_form, solve_mode_companion, CubicCase,
    RootClassification, TemporalSolution,
};
pub use verify::{decay_check, mode_residual, pde_residual, DecayReport, ResidualReport};
