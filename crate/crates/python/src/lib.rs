//! Python bindings for the cfheat solver: expression handling, the
//! fractional-derivative operators, cubic classification, and the full
//! solve pipeline.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyComplex, PyDict, PyList};

use cfheat::cf::{self, FractionalOrder, SampledFunction};
use cfheat::config;
use cfheat::expr::{self, Var};
use cfheat::pipeline::{self, SolveOptions, SolverChoice};
use cfheat::reduction::{self, InitialData, Numerics, ProblemSpec};
use cfheat::report;
use cfheat::spectral::{self, ForcingField};
use cfheat::temporal;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_var(name: &str) -> PyResult<Var> {
    match name {
        "t" => Ok(Var::T),
        "x" => Ok(Var::X),
        other => Err(PyValueError::new_err(format!(
            "unknown variable `{other}` (expected `t` or `x`)"
        ))),
    }
}

fn contains_x(e: &expr::Expr) -> bool {
    use expr::Expr::*;
    match e {
        Num(_) | Pi => false,
        Var(v) => *v == expr::Var::X,
        Neg(u) | Pow(u, _) | Sin(u) | Cos(u) | Exp(u) => contains_x(u),
        Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => contains_x(a) || contains_x(b),
    }
}

/// A parsed expression in the variables `t` and `x`.
#[pyclass(name = "Expr", frozen)]
struct PyExpr {
    inner: expr::Expr,
}

#[pymethods]
impl PyExpr {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyExpr {
            inner: expr::parse(text).map_err(value_error)?,
        })
    }

    /// Evaluate at a point; division by zero raises ValueError.
    #[pyo3(signature = (t, x = 0.0))]
    fn eval(&self, t: f64, x: f64) -> PyResult<f64> {
        expr::eval(&self.inner, t, x).map_err(value_error)
    }

    #[pyo3(signature = (t, x = 0.0))]
    fn __call__(&self, t: f64, x: f64) -> PyResult<f64> {
        self.eval(t, x)
    }

    /// Exact symbolic derivative with respect to `"t"` or `"x"`.
    #[pyo3(signature = (var, order = 1))]
    fn diff(&self, var: &str, order: usize) -> PyResult<Self> {
        let var = parse_var(var)?;
        Ok(PyExpr {
            inner: expr::differentiate(&self.inner, var, order).map_err(value_error)?,
        })
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expr(\"{}\")", self.inner)
    }
}

fn sampled(expr: &PyExpr, panels: usize, richardson: bool) -> PyResult<SampledFunction> {
    if contains_x(&expr.inner) {
        return Err(PyValueError::new_err(
            "fractional operators act on functions of t only; the expression mentions x",
        ));
    }
    let table: Vec<expr::Expr> = (0..=6)
        .map(|j| expr::differentiate(&expr.inner, Var::T, j))
        .collect::<Result<_, _>>()
        .map_err(value_error)?;
    Ok(
        SampledFunction::new(0.0, 6, move |j, t| {
            expr::eval(&table[j], t, 0.0).unwrap_or(f64::NAN)
        })
        .with_panels(panels)
        .with_richardson(richardson),
    )
}

/// Fractional derivative of order `alpha` by kernel quadrature.
#[pyfunction]
#[pyo3(signature = (expr, alpha, t, panels = 4096, richardson = false))]
fn cf_derivative(
    expr: &PyExpr,
    alpha: f64,
    t: f64,
    panels: usize,
    richardson: bool,
) -> PyResult<f64> {
    let ord = FractionalOrder::new(alpha).map_err(value_error)?;
    let g = sampled(expr, panels, richardson)?;
    Ok(cf::cf_derivative(&g, ord, t).map_err(value_error)?.value)
}

/// Fractional derivative of order `alpha + n` by composition.
#[pyfunction]
#[pyo3(signature = (expr, alpha, n, t, panels = 4096, richardson = false))]
fn cf_derivative_higher(
    expr: &PyExpr,
    alpha: f64,
    n: usize,
    t: f64,
    panels: usize,
    richardson: bool,
) -> PyResult<f64> {
    let ord = FractionalOrder::new(alpha).map_err(value_error)?;
    let g = sampled(expr, panels, richardson)?;
    Ok(cf::cf_derivative_higher(&g, ord, n, t)
        .map_err(value_error)?
        .value)
}

/// Closed integration-by-parts expansion of the order `alpha + n` derivative.
#[pyfunction]
#[pyo3(signature = (expr, alpha, n, t, panels = 4096, richardson = false))]
fn cf_expansion(
    expr: &PyExpr,
    alpha: f64,
    n: usize,
    t: f64,
    panels: usize,
    richardson: bool,
) -> PyResult<f64> {
    let ord = FractionalOrder::new(alpha).map_err(value_error)?;
    let g = sampled(expr, panels, richardson)?;
    Ok(cf::cf_expansion(&g, ord, n, t).map_err(value_error)?.value)
}

/// Classify the monic cubic by discriminant; returns a dict with the
/// discriminant, the case label, and the three roots as complex numbers.
#[pyfunction]
#[pyo3(signature = (a1, a2, a3, tol = temporal::DEGENERACY_TOL))]
fn classify_cubic<'py>(
    py: Python<'py>,
    a1: f64,
    a2: f64,
    a3: f64,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let class = temporal::classify_cubic(a1, a2, a3, tol);
    let out = PyDict::new(py);
    out.set_item("discriminant", class.discriminant)?;
    out.set_item("case", class.case.label())?;
    let roots = PyList::empty(py);
    for root in class.roots {
        roots.append(PyComplex::from_doubles(py, root.re, root.im))?;
    }
    out.set_item("roots", roots)?;
    Ok(out)
}

fn build_problem(
    alpha: f64,
    k: usize,
    lambdas: Vec<f64>,
    q: f64,
    forcing: &str,
    modes: usize,
    nt: usize,
    nx: usize,
) -> PyResult<ProblemSpec> {
    let order = FractionalOrder::new(alpha).map_err(value_error)?;
    let parsed = expr::parse(forcing).map_err(value_error)?;
    let field = ForcingField::from_expr(&parsed, q).map_err(value_error)?;
    let spec = ProblemSpec {
        order,
        k,
        lambdas,
        q,
        forcing: field,
        initial: InitialData::Zero,
        modes,
        numerics: Numerics {
            nt,
            nx,
            ..Numerics::default()
        },
    };
    spec.validate().map_err(value_error)?;
    Ok(spec)
}

/// Monic coefficients of the reduced integer-order ODE for one mode,
/// ascending in derivative order.
#[pyfunction]
fn transform_coefficients(
    alpha: f64,
    lambdas: Vec<f64>,
    m: usize,
    q: f64,
) -> PyResult<Vec<f64>> {
    let k = lambdas.len().saturating_sub(1);
    let spec = build_problem(alpha, k, lambdas, q, "0", 1.max(m), 8, 8)?;
    reduction::transform_coefficients(&spec, m).map_err(value_error)
}

/// Normalized sine coefficients of the forcing at time `t`.
#[pyfunction]
#[pyo3(signature = (forcing, m_max, t, q = 1.0))]
fn sine_coefficients(forcing: &str, m_max: usize, t: f64, q: f64) -> PyResult<Vec<f64>> {
    let parsed = expr::parse(forcing).map_err(value_error)?;
    let field = ForcingField::from_expr(&parsed, q).map_err(value_error)?;
    spectral::sine_coefficients(&field, m_max, t).map_err(value_error)
}

/// Check the seven compatibility conditions on the forcing; returns a dict
/// with the overall flag and per-condition records.
#[pyfunction]
#[pyo3(signature = (forcing, q = 1.0, tol = 1e-9))]
fn validate_compatibility<'py>(
    py: Python<'py>,
    forcing: &str,
    q: f64,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let parsed = expr::parse(forcing).map_err(value_error)?;
    let field = ForcingField::from_expr(&parsed, q).map_err(value_error)?;
    let report = spectral::validate_compatibility(&field, tol).map_err(value_error)?;
    let out = PyDict::new(py);
    out.set_item("pass", report.pass)?;
    out.set_item("tolerance", report.tolerance)?;
    let conditions = PyList::empty(py);
    for cond in &report.conditions {
        let entry = PyDict::new(py);
        entry.set_item("name", cond.name)?;
        entry.set_item("max_violation", cond.max_violation)?;
        entry.set_item("pass", cond.pass)?;
        conditions.append(entry)?;
    }
    out.set_item("conditions", conditions)?;
    Ok(out)
}

/// In-memory solution of a full problem with zero initial data.
#[pyclass(name = "Solution", frozen)]
struct PySolution {
    #[pyo3(get)]
    t_nodes: Vec<f64>,
    #[pyo3(get)]
    x_nodes: Vec<f64>,
    #[pyo3(get)]
    values: Vec<Vec<f64>>,
    #[pyo3(get)]
    mode_sup: Vec<f64>,
    #[pyo3(get)]
    mode_residual_sup: f64,
    #[pyo3(get)]
    grid_residual_sup: f64,
    #[pyo3(get)]
    boundary_violation: f64,
    #[pyo3(get)]
    compatibility_pass: bool,
    #[pyo3(get)]
    solver: String,
}

#[pymethods]
impl PySolution {
    fn __repr__(&self) -> String {
        format!(
            "Solution(modes={}, grid={}x{}, mode_residual_sup={:e})",
            self.mode_sup.len(),
            self.t_nodes.len(),
            self.x_nodes.len(),
            self.mode_residual_sup
        )
    }
}

/// Solve the fractional heat problem and return the synthesized grid with
/// verification summaries.
#[pyfunction]
#[pyo3(signature = (alpha, lambdas, q, forcing, modes, nt = 64, nx = 64, solver = "auto", jobs = None))]
#[allow(clippy::too_many_arguments)]
fn solve_problem(
    py: Python<'_>,
    alpha: f64,
    lambdas: Vec<f64>,
    q: f64,
    forcing: &str,
    modes: usize,
    nt: usize,
    nx: usize,
    solver: &str,
    jobs: Option<usize>,
) -> PyResult<PySolution> {
    let k = lambdas.len().saturating_sub(1);
    let spec = build_problem(alpha, k, lambdas, q, forcing, modes, nt, nx)?;
    let solver: SolverChoice = solver.parse().map_err(PyValueError::new_err)?;
    let opts = SolveOptions {
        solver,
        jobs,
        ..SolveOptions::default()
    };
    let output = py
        .detach(|| pipeline::solve_problem(&spec, &opts))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(PySolution {
        t_nodes: output.grid.t_nodes.clone(),
        x_nodes: output.grid.x_nodes.clone(),
        values: output.grid.values.clone(),
        mode_sup: output.modes.iter().map(|d| d.sup).collect(),
        mode_residual_sup: output.residual.mode_sup,
        grid_residual_sup: output.residual.grid_sup,
        boundary_violation: output.residual.boundary_violation,
        compatibility_pass: output.compatibility.pass,
        solver: output.grid.provenance.solver.clone(),
    })
}

/// Run the batch front end on a config file, writing the same artifacts as
/// the `cfheat solve` command; returns a summary dict.
#[pyfunction]
#[pyo3(signature = (config_path, out_dir = None, jobs = None, cross_check = false))]
fn solve_config<'py>(
    py: Python<'py>,
    config_path: &str,
    out_dir: Option<&str>,
    jobs: Option<usize>,
    cross_check: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let raw = std::fs::read(config_path)
        .map_err(|e| PyRuntimeError::new_err(format!("cannot read {config_path}: {e}")))?;
    let text = String::from_utf8(raw.clone())
        .map_err(|_| PyValueError::new_err("config is not valid UTF-8"))?;
    let cfg = config::parse_config(&text).map_err(value_error)?;
    let spec = cfg.to_problem().map_err(value_error)?;
    let opts = SolveOptions {
        solver: cfg.solver,
        jobs,
        cross_check,
        compatibility_tol: cfg.tol_compatibility,
    };
    let mut output = py
        .detach(|| pipeline::solve_problem(&spec, &opts))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    output.grid.provenance.config_hash = report::fnv1a64(&raw);

    let dir = out_dir
        .map(std::path::PathBuf::from)
        .or_else(|| cfg.out_dir.as_ref().map(std::path::PathBuf::from))
        .unwrap_or_else(|| std::path::PathBuf::from("out"));
    let (grid, diag, verify) =
        report::write_artifacts(&dir, &output, cfg.tol_mode_residual, cfg.tol_grid_residual)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;

    let summary = PyDict::new(py);
    summary.set_item("grid_csv", grid.to_string_lossy())?;
    summary.set_item("diagnostics", diag.to_string_lossy())?;
    summary.set_item("verification", verify.to_string_lossy())?;
    summary.set_item("mode_residual_sup", output.residual.mode_sup)?;
    summary.set_item("grid_residual_sup", output.residual.grid_sup)?;
    summary.set_item("compatibility_pass", output.compatibility.pass)?;
    summary.set_item(
        "residual_pass",
        output.residual.mode_sup <= cfg.tol_mode_residual
            && output.residual.grid_sup <= cfg.tol_grid_residual,
    )?;
    Ok(summary)
}

#[pymodule]
fn cfheat_py(_py: Python<'_>, m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExpr>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(cf_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(cf_derivative_higher, m)?)?;
    m.add_function(wrap_pyfunction!(cf_expansion, m)?)?;
    m.add_function(wrap_pyfunction!(classify_cubic, m)?)?;
    m.add_function(wrap_pyfunction!(transform_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(sine_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(validate_compatibility, m)?)?;
    m.add_function(wrap_pyfunction!(solve_problem, m)?)?;
    m.add_function(wrap_pyfunction!(solve_config, m)?)?;
    Ok(())
}
