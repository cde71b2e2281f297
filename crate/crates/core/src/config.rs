//! Run configuration: a flat `key = value` text format with typed scalars,
//! vectors, and strings. Parsing is strict — unknown or duplicate keys are
//! rejected — so experiment inputs stay reproducible and diffable.
//!
//! ```text
//! # heat problem, three fractional terms
//! alpha   = 0.5
//! k       = 2
//! lambda  = 1 1 1
//! q       = 1.0
//! forcing = "t^4*sin(pi*x)"
//! modes   = 8
//! grid_t  = 64
//! grid_x  = 64
//! # per-mode initial data (defaults to zero everywhere)
//! initial_mode_1 = 0 0 0
//! ```

use std::collections::BTreeMap;

use thiserror::Error;

use crate::cf::FractionalOrder;
use crate::expr;
use crate::pipeline::SolverChoice;
use crate::reduction::{InitialData, Numerics, ProblemError, ProblemSpec};
use crate::spectral::ForcingField;
use crate::verify;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Malformed { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value for `{key}`: {reason}")]
    InvalidValue {
        line: usize,
        key: String,
        reason: String,
    },
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("forcing expression: {0}")]
    Forcing(#[from] expr::ParseError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Parsed run configuration; see the module docs for the file format.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub alpha: f64,
    pub k: usize,
    pub lambdas: Vec<f64>,
    pub q: f64,
    pub forcing: String,
    pub initial: InitialData,
    pub modes: usize,
    pub nt: usize,
    pub nx: usize,
    pub solver: SolverChoice,
    pub out_dir: Option<String>,
    pub tol_mode_residual: f64,
    pub tol_grid_residual: f64,
    pub tol_compatibility: f64,
    pub quad_panels: usize,
    pub ode_steps: usize,
    pub modal_samples: usize,
    pub residual_nodes: usize,
}

struct RawEntry {
    line: usize,
    value: String,
}

fn parse_scalar<T: std::str::FromStr>(
    entry: &RawEntry,
    key: &str,
) -> Result<T, ConfigError> {
    entry
        .value
        .parse::<T>()
        .map_err(|_| ConfigError::InvalidValue {
            line: entry.line,
            key: key.to_owned(),
            reason: format!("cannot parse `{}`", entry.value),
        })
}

fn parse_vector(entry: &RawEntry, key: &str) -> Result<Vec<f64>, ConfigError> {
    entry
        .value
        .split_whitespace()
        .map(|tok| {
            tok.parse::<f64>().map_err(|_| ConfigError::InvalidValue {
                line: entry.line,
                key: key.to_owned(),
                reason: format!("`{tok}` is not a number"),
            })
        })
        .collect()
}

fn unquote(value: &str) -> String {
    let trimmed = value.trim();
    if trimmed.len() >= 2 && trimmed.starts_with('"') && trimmed.ends_with('"') {
        trimmed[1..trimmed.len() - 1].to_owned()
    } else {
        trimmed.to_owned()
    }
}

const KNOWN_KEYS: &[&str] = &[
    "alpha",
    "k",
    "lambda",
    "q",
    "forcing",
    "initial",
    "modes",
    "grid_t",
    "grid_x",
    "solver",
    "out_dir",
    "tol_mode_residual",
    "tol_grid_residual",
    "tol_compatibility",
    "quad_panels",
    "ode_steps",
    "modal_samples",
    "residual_nodes",
];

/// Parse a configuration document. Every key is `key = value`; `#` starts a
/// comment; string values may be double-quoted; vector values are
/// whitespace-separated numbers; per-mode initial data uses keys of the
/// form `initial_mode_<m>`.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut entries: BTreeMap<String, RawEntry> = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        if content.trim().is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or(ConfigError::Malformed { line })?;
        let key = key.trim().to_owned();
        let value = value.trim().to_owned();
        if key.is_empty() {
            return Err(ConfigError::Malformed { line });
        }
        let known = KNOWN_KEYS.contains(&key.as_str())
            || key
                .strip_prefix("initial_mode_")
                .map(|m| m.parse::<usize>().is_ok())
                .unwrap_or(false);
        if !known {
            return Err(ConfigError::UnknownKey { line, key });
        }
        if entries.contains_key(&key) {
            return Err(ConfigError::DuplicateKey { line, key });
        }
        entries.insert(key, RawEntry { line, value });
    }

    let required = |key: &'static str| -> Result<&RawEntry, ConfigError> {
        entries.get(key).ok_or(ConfigError::MissingKey(key))
    };

    let alpha: f64 = parse_scalar(required("alpha")?, "alpha")?;
    let k: usize = parse_scalar(required("k")?, "k")?;
    let lambdas = parse_vector(required("lambda")?, "lambda")?;
    let q: f64 = parse_scalar(required("q")?, "q")?;
    let forcing = unquote(&required("forcing")?.value);
    let modes: usize = parse_scalar(required("modes")?, "modes")?;

    let optional_scalar = |key: &str, default: f64| -> Result<f64, ConfigError> {
        match entries.get(key) {
            Some(entry) => parse_scalar(entry, key),
            None => Ok(default),
        }
    };
    let optional_usize = |key: &str, default: usize| -> Result<usize, ConfigError> {
        match entries.get(key) {
            Some(entry) => parse_scalar(entry, key),
            None => Ok(default),
        }
    };

    let defaults = Numerics::default();
    let nt = optional_usize("grid_t", defaults.nt)?;
    let nx = optional_usize("grid_x", defaults.nx)?;
    let quad_panels = optional_usize("quad_panels", defaults.quad_panels)?;
    let ode_steps = optional_usize("ode_steps", defaults.ode_steps)?;
    let modal_samples = optional_usize("modal_samples", defaults.modal_samples)?;
    let residual_nodes = optional_usize("residual_nodes", defaults.residual_nodes)?;

    let solver = match entries.get("solver") {
        Some(entry) => entry
            .value
            .parse::<SolverChoice>()
            .map_err(|reason| ConfigError::InvalidValue {
                line: entry.line,
                key: "solver".into(),
                reason,
            })?,
        None => SolverChoice::Auto,
    };

    let initial = match entries.get("initial") {
        Some(entry) if entry.value == "zero" => InitialData::Zero,
        Some(entry) => {
            return Err(ConfigError::InvalidValue {
                line: entry.line,
                key: "initial".into(),
                reason: "expected `zero` (use initial_mode_<m> for vectors)".into(),
            })
        }
        None => InitialData::Zero,
    };
    let mut per_mode = BTreeMap::new();
    for (key, entry) in &entries {
        if let Some(m) = key.strip_prefix("initial_mode_") {
            let m: usize = m.parse().expect("validated above");
            per_mode.insert(m, parse_vector(entry, key)?);
        }
    }
    let initial = if per_mode.is_empty() {
        initial
    } else {
        InitialData::PerMode(per_mode)
    };

    Ok(RunConfig {
        alpha,
        k,
        lambdas,
        q,
        forcing,
        initial,
        modes,
        nt,
        nx,
        solver,
        out_dir: entries.get("out_dir").map(|e| unquote(&e.value)),
        tol_mode_residual: optional_scalar("tol_mode_residual", verify::DEFAULT_MODE_TOLERANCE)?,
        tol_grid_residual: optional_scalar("tol_grid_residual", verify::DEFAULT_GRID_TOLERANCE)?,
        tol_compatibility: optional_scalar(
            "tol_compatibility",
            verify::DEFAULT_COMPATIBILITY_TOLERANCE,
        )?,
        quad_panels,
        ode_steps,
        modal_samples,
        residual_nodes,
    })
}

impl RunConfig {
    /// Build the solver-facing problem description, parsing the forcing
    /// expression and validating every structural invariant.
    pub fn to_problem(&self) -> Result<ProblemSpec, ConfigError> {
        let order = FractionalOrder::new(self.alpha).map_err(|_| ConfigError::InvalidValue {
            line: 0,
            key: "alpha".into(),
            reason: format!("alpha must lie strictly between 0 and 1, got {}", self.alpha),
        })?;
        let parsed = expr::parse(&self.forcing)?;
        let forcing = ForcingField::from_expr(&parsed, self.q).map_err(|e| {
            ConfigError::InvalidValue {
                line: 0,
                key: "forcing".into(),
                reason: e.to_string(),
            }
        })?;
        let spec = ProblemSpec {
            order,
            k: self.k,
            lambdas: self.lambdas.clone(),
            q: self.q,
            forcing,
            initial: self.initial.clone(),
            modes: self.modes,
            numerics: Numerics {
                quad_panels: self.quad_panels,
                ode_steps: self.ode_steps,
                modal_samples: self.modal_samples,
                residual_nodes: self.residual_nodes,
                nt: self.nt,
                nx: self.nx,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}
