//! End-to-end orchestration: modal analysis of the forcing, per-mode
//! reduction and solve (fanned out across modes), synthesis of the solution
//! grid, and assembly of the verification reports.

use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::reduction::{self, ProblemError, ProblemSpec};
use crate::spectral::{self, CompatibilityReport, ModalCoefficients, SpectralError};
use crate::temporal::{
    self, RootClassification, SolverKind, TemporalError, TemporalSolution, DEGENERACY_TOL,
};
use crate::verify::{self, DecayReport, ResidualReport, VerifyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Auto,
    ClosedForm,
    Companion,
}

impl SolverChoice {
    pub fn label(&self) -> &'static str {
        match self {
            SolverChoice::Auto => "auto",
            SolverChoice::ClosedForm => "closed-form",
            SolverChoice::Companion => "companion",
        }
    }
}

impl FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(SolverChoice::Auto),
            "closed-form" => Ok(SolverChoice::ClosedForm),
            "companion" => Ok(SolverChoice::Companion),
            other => Err(format!(
                "unknown solver `{other}` (expected auto, closed-form, or companion)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub solver: SolverChoice,
    pub jobs: Option<usize>,
    pub cross_check: bool,
    pub compatibility_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            solver: SolverChoice::Auto,
            jobs: None,
            cross_check: false,
            compatibility_tol: verify::DEFAULT_COMPATIBILITY_TOLERANCE,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Temporal(#[from] TemporalError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("forcing is not evaluable at (t = {t}, x = {x})")]
    NonEvaluable { t: f64, x: f64 },
    #[error("closed-form solver requires k = 2, got k = {0}")]
    ClosedFormOrder(usize),
}

/// Provenance metadata embedded in every emitted artifact.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub config_hash: u64,
    pub solver: String,
    pub quad_panels: usize,
    pub ode_steps: usize,
    pub modal_samples: usize,
}

/// Synthesized solution values on the output grid, plus the per-mode traces
/// they were built from.
pub struct SolutionGrid {
    /// `nt + 1` uniform nodes on `[0, q]`.
    pub t_nodes: Vec<f64>,
    /// `nx + 1` uniform nodes on `[0, 1]`.
    pub x_nodes: Vec<f64>,
    /// `values[i][j] = u(t_i, x_j)`; exactly zero in the first and last column.
    pub values: Vec<Vec<f64>>,
    /// `mode_traces[m-1][i] = T_m(t_i)`.
    pub mode_traces: Vec<Vec<f64>>,
    pub provenance: Provenance,
}

impl SolutionGrid {
    /// Largest boundary-column magnitude (exactly zero for synthesized grids).
    pub fn boundary_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for row in &self.values {
            if let (Some(first), Some(last)) = (row.first(), row.last()) {
                worst = worst.max(first.abs()).max(last.abs());
            }
        }
        worst
    }
}

/// Per-mode solve summary for the diagnostics report.
pub struct ModeDiagnostics {
    pub m: usize,
    pub classification: Option<RootClassification>,
    pub constants: Vec<f64>,
    pub solver: SolverKind,
    pub sup: f64,
    pub residual: f64,
    pub cross_check: Option<f64>,
}

pub struct SolveOutput {
    pub grid: SolutionGrid,
    pub modes: Vec<ModeDiagnostics>,
    pub solutions: Vec<TemporalSolution>,
    pub residual: ResidualReport,
    pub decay: Option<DecayReport>,
    pub compatibility: CompatibilityReport,
}

fn classify_reduction(coeffs: &[f64]) -> RootClassification {
    // Ascending monic coefficients of the cubic: (B0, B1, B2) = (A3, A2, A1).
    temporal::classify_cubic(coeffs[2], coeffs[1], coeffs[0], DEGENERACY_TOL)
}

fn solve_one(
    spec: &ProblemSpec,
    fm: Arc<ModalCoefficients>,
    opts: &SolveOptions,
) -> Result<(ModeDiagnostics, TemporalSolution), PipelineError> {
    let ode = reduction::reduce_mode(spec, Arc::clone(&fm))?;
    let classification = if spec.k == 2 {
        Some(classify_reduction(&ode.coeffs))
    } else {
        None
    };

    let choice = match opts.solver {
        SolverChoice::Auto => {
            if spec.k == 2 {
                SolverChoice::ClosedForm
            } else {
                SolverChoice::Companion
            }
        }
        other => other,
    };

    let steps = spec.numerics.ode_steps;
    let solution = match choice {
        SolverChoice::ClosedForm => {
            let class = classification
                .as_ref()
                .ok_or(PipelineError::ClosedFormOrder(spec.k))?;
            temporal::solve_mode_closed_form_with_steps(&ode, class, steps)?
        }
        _ => temporal::solve_mode_companion_with_steps(&ode, steps)?,
    };

    let cross_check = if opts.cross_check && spec.k == 2 {
        let other = match solution.provenance {
            SolverKind::ClosedForm => temporal::solve_mode_companion_with_steps(&ode, steps)?,
            SolverKind::Companion => {
                let class = classification
                    .as_ref()
                    .ok_or(PipelineError::ClosedFormOrder(spec.k))?;
                temporal::solve_mode_closed_form_with_steps(&ode, class, steps)?
            }
        };
        let mut worst = 0.0f64;
        let samples = 256;
        for i in 0..=samples {
            let t = spec.q * i as f64 / samples as f64;
            worst = worst.max((solution.eval(t) - other.eval(t)).abs());
        }
        Some(worst)
    } else {
        None
    };

    let t_nodes: Vec<f64> = (1..=spec.numerics.residual_nodes)
        .map(|i| spec.q * i as f64 / spec.numerics.residual_nodes as f64)
        .collect();
    let residual = verify::mode_residual(&solution, spec, &fm, &t_nodes)?;

    let diagnostics = ModeDiagnostics {
        m: fm.m,
        classification,
        constants: solution.constants.clone(),
        solver: solution.provenance,
        sup: solution.sup_abs(256),
        residual,
        cross_check,
    };
    Ok((diagnostics, solution))
}

/// Solve the whole problem: sample modal forcing coefficients, reduce and
/// solve every mode (concurrently, bounded by `opts.jobs`), synthesize the
/// output grid, and run the verification suite.
pub fn solve_problem(spec: &ProblemSpec, opts: &SolveOptions) -> Result<SolveOutput, PipelineError> {
    spec.validate()?;

    // The forcing must be evaluable on the full output grid before any
    // quadrature sees it.
    let nt = spec.numerics.nt.max(1);
    let nx = spec.numerics.nx.max(1);
    let t_nodes: Vec<f64> = (0..=nt).map(|i| spec.q * i as f64 / nt as f64).collect();
    let x_nodes: Vec<f64> = (0..=nx).map(|j| j as f64 / nx as f64).collect();
    for &t in &t_nodes {
        for &x in &x_nodes {
            if !spec.forcing.value(t, x).is_finite() {
                return Err(PipelineError::NonEvaluable { t, x });
            }
        }
    }

    let compatibility = spectral::validate_compatibility(&spec.forcing, opts.compatibility_tol)?;

    let modal: Vec<Arc<ModalCoefficients>> =
        ModalCoefficients::sample(&spec.forcing, spec.modes, spec.numerics.modal_samples)?
            .into_iter()
            .map(Arc::new)
            .collect();

    let solve_all = || -> Result<Vec<(ModeDiagnostics, TemporalSolution)>, PipelineError> {
        modal
            .par_iter()
            .map(|fm| solve_one(spec, Arc::clone(fm), opts))
            .collect()
    };
    let mut results = match opts.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("thread pool")
            .install(solve_all)?,
        None => solve_all()?,
    };
    results.sort_by_key(|(d, _)| d.m);

    let mut modes = Vec::with_capacity(results.len());
    let mut solutions = Vec::with_capacity(results.len());
    for (diag, sol) in results {
        modes.push(diag);
        solutions.push(sol);
    }

    let mode_traces: Vec<Vec<f64>> = solutions
        .iter()
        .map(|sol| t_nodes.iter().map(|&t| sol.eval(t)).collect())
        .collect();
    let modal_for_synthesis: Vec<(usize, Vec<f64>)> = solutions
        .iter()
        .zip(&mode_traces)
        .map(|(sol, trace)| (sol.m, trace.clone()))
        .collect();
    let values = spectral::synthesize(&modal_for_synthesis, &x_nodes)?;

    let solver_label = {
        let mut kinds: Vec<&str> = modes.iter().map(|d| d.solver.label()).collect();
        kinds.dedup();
        let mut label = kinds.join("+");
        if opts.cross_check && spec.k == 2 {
            label.push_str("+cross-check");
        }
        label
    };
    let grid = SolutionGrid {
        t_nodes,
        x_nodes,
        values,
        mode_traces,
        provenance: Provenance {
            config_hash: 0,
            solver: solver_label,
            quad_panels: spec.numerics.quad_panels,
            ode_steps: spec.numerics.ode_steps,
            modal_samples: spec.numerics.modal_samples,
        },
    };

    let residual = verify::pde_residual(&grid, spec, &solutions, &modal)?;
    let decay = if spec.modes >= 8 {
        Some(verify::decay_check(&solutions, spec)?)
    } else {
        None
    };

    Ok(SolveOutput {
        grid,
        modes,
        solutions,
        residual,
        decay,
        compatibility,
    })
}
