//! Artifact emission: the solution grid as CSV and the per-mode
//! diagnostics and verification results as flat key-value documents.
//!
//! Numbers are printed with the shortest round-trip decimal representation
//! (Rust's default float formatting), so identical inputs yield
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::pipeline::{SolutionGrid, SolveOutput};

/// 64-bit FNV-1a hash, used to fingerprint the raw configuration bytes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn fmt_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im > 0.0 {
        format!("{}+{}i", z.re, z.im)
    } else {
        format!("{}-{}i", z.re, -z.im)
    }
}

/// Solution grid as CSV: header row of x nodes (first column `t`), one row
/// per time node.
pub fn grid_csv(grid: &SolutionGrid) -> String {
    let mut out = String::new();
    out.push('t');
    for x in &grid.x_nodes {
        let _ = write!(out, ",{x}");
    }
    out.push('\n');
    for (row, t) in grid.values.iter().zip(&grid.t_nodes) {
        let _ = write!(out, "{t}");
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

fn provenance_lines(out: &mut String, grid: &SolutionGrid) {
    let p = &grid.provenance;
    let _ = writeln!(out, "config_hash = {:#018x}", p.config_hash);
    let _ = writeln!(out, "solver = {}", p.solver);
    let _ = writeln!(out, "quad_panels = {}", p.quad_panels);
    let _ = writeln!(out, "ode_steps = {}", p.ode_steps);
    let _ = writeln!(out, "modal_samples = {}", p.modal_samples);
}

/// Per-mode diagnostics document: discriminant, case, roots, constants,
/// magnitude, and residual for every solved mode.
pub fn diagnostics_document(output: &SolveOutput) -> String {
    let mut doc = String::from("# cfheat diagnostics\n");
    provenance_lines(&mut doc, &output.grid);
    let _ = writeln!(doc, "modes = {}", output.modes.len());
    for diag in &output.modes {
        doc.push('\n');
        let _ = writeln!(doc, "mode = {}", diag.m);
        let _ = writeln!(doc, "mode_{}.solver = {}", diag.m, diag.solver.label());
        if let Some(class) = &diag.classification {
            let _ = writeln!(doc, "mode_{}.case = {}", diag.m, class.case.label());
            let _ = writeln!(doc, "mode_{}.discriminant = {}", diag.m, class.discriminant);
            for (idx, root) in class.roots.iter().enumerate() {
                let _ = writeln!(doc, "mode_{}.root_{} = {}", diag.m, idx + 1, fmt_complex(*root));
            }
        }
        for (idx, c) in diag.constants.iter().enumerate() {
            let _ = writeln!(doc, "mode_{}.constant_{} = {}", diag.m, idx + 1, c);
        }
        let _ = writeln!(doc, "mode_{}.sup = {}", diag.m, diag.sup);
        let _ = writeln!(doc, "mode_{}.residual = {}", diag.m, diag.residual);
        if let Some(diff) = diag.cross_check {
            let _ = writeln!(doc, "mode_{}.cross_check_diff = {}", diag.m, diff);
        }
    }
    doc
}

/// Verification report: residual norms against their tolerances, boundary
/// and initial violations, compatibility conditions, and the decay fit.
pub fn verification_document(output: &SolveOutput, tol_mode: f64, tol_grid: f64) -> String {
    let mut doc = String::from("# cfheat verification\n");
    provenance_lines(&mut doc, &output.grid);
    let r = &output.residual;
    let _ = writeln!(doc, "truncation = {}", r.truncation);
    let _ = writeln!(doc, "mode_residual.sup = {}", r.mode_sup);
    let _ = writeln!(doc, "mode_residual.tolerance = {tol_mode}");
    let _ = writeln!(doc, "mode_residual.pass = {}", r.mode_sup <= tol_mode);
    for (m, value) in &r.mode_residuals {
        let _ = writeln!(doc, "mode_residual.mode_{m} = {value}");
    }
    let _ = writeln!(doc, "grid_residual.sup = {}", r.grid_sup);
    let _ = writeln!(doc, "grid_residual.rms = {}", r.grid_rms);
    let _ = writeln!(doc, "grid_residual.tolerance = {tol_grid}");
    let _ = writeln!(doc, "grid_residual.pass = {}", r.grid_sup <= tol_grid);
    let _ = writeln!(doc, "boundary.max_violation = {}", r.boundary_violation);
    let _ = writeln!(doc, "initial.max_violation = {}", r.initial_violation);

    let compat = &output.compatibility;
    let _ = writeln!(doc, "compatibility.tolerance = {}", compat.tolerance);
    let _ = writeln!(doc, "compatibility.pass = {}", compat.pass);
    for cond in &compat.conditions {
        let _ = writeln!(
            doc,
            "compatibility.{}.max_violation = {}",
            cond.name, cond.max_violation
        );
        let _ = writeln!(doc, "compatibility.{}.pass = {}", cond.name, cond.pass);
    }

    if let Some(decay) = &output.decay {
        if let Some(fit) = decay.fit {
            let _ = writeln!(doc, "decay.slope = {}", fit.slope);
            let _ = writeln!(doc, "decay.intercept = {}", fit.intercept);
            let _ = writeln!(doc, "decay.modes_used = {}", fit.modes_used);
        }
        let _ = writeln!(doc, "decay.m20 = {}", decay.m20);
        let _ = writeln!(doc, "decay.m22 = {}", decay.m22);
        let _ = writeln!(doc, "decay.m23 = {}", decay.m23);
        let _ = writeln!(doc, "decay.forcing_compatible = {}", decay.forcing_compatible);
        let _ = writeln!(doc, "decay.tail_bounded = {}", decay.tail_bounded);
        let _ = writeln!(doc, "decay.certified = {}", decay.certified);
        for (m, sup) in &decay.mode_sup {
            let _ = writeln!(doc, "decay.sup_mode_{m} = {sup}");
        }
    }
    doc
}

/// Write `grid.csv`, `diagnostics.txt`, and `verification.txt` under `dir`,
/// creating the directory if needed.
pub fn write_artifacts(
    dir: &Path,
    output: &SolveOutput,
    tol_mode: f64,
    tol_grid: f64,
) -> io::Result<(PathBuf, PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let grid_path = dir.join("grid.csv");
    let diag_path = dir.join("diagnostics.txt");
    let verify_path = dir.join("verification.txt");
    fs::write(&grid_path, grid_csv(&output.grid))?;
    fs::write(&diag_path, diagnostics_document(output))?;
    fs::write(&verify_path, verification_document(output, tol_mode, tol_grid))?;
    Ok((grid_path, diag_path, verify_path))
}
