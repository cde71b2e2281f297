use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cfheat::config::{self, RunConfig};
use cfheat::pipeline::{self, SolveOptions};
use cfheat::report;
use cfheat::spectral;

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "CFHEAT_OUT";

#[derive(Parser)]
#[command(
    name = "cfheat",
    version,
    about = "Spectral solver for multi-term time-fractional heat equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the problem described by a config file and emit the solution
    /// grid, per-mode diagnostics, and verification report
    Solve {
        /// Path to the key-value configuration file
        config: PathBuf,
        /// Treat compatibility-condition failures as errors (exit 2)
        #[arg(long)]
        strict: bool,
        /// Bound the per-mode solve fan-out
        #[arg(long, value_name = "N")]
        jobs: Option<usize>,
        /// Run both solvers for k = 2 and report their sup-norm difference
        #[arg(long)]
        cross_check: bool,
        /// Output directory (overrides CFHEAT_OUT and the config)
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Check the config and the forcing compatibility conditions without solving
    Validate {
        /// Path to the key-value configuration file
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = match cli.command {
        Command::Solve {
            config,
            strict,
            jobs,
            cross_check,
            out,
        } => cmd_solve(&config, strict, jobs, cross_check, out),
        Command::Validate { config } => cmd_validate(&config),
    };
    ExitCode::from(status)
}

fn load_config(path: &PathBuf) -> Result<(RunConfig, u64), String> {
    let raw = std::fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let text = String::from_utf8(raw.clone())
        .map_err(|_| format!("{} is not valid UTF-8", path.display()))?;
    let cfg = config::parse_config(&text).map_err(|e| e.to_string())?;
    Ok((cfg, report::fnv1a64(&raw)))
}

fn resolve_out_dir(flag: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    if let Some(dir) = flag {
        return dir;
    }
    if let Some(dir) = &cfg.out_dir {
        return PathBuf::from(dir);
    }
    if let Ok(dir) = std::env::var(OUT_ENV) {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    PathBuf::from("out")
}

fn cmd_solve(
    path: &PathBuf,
    strict: bool,
    jobs: Option<usize>,
    cross_check: bool,
    out: Option<PathBuf>,
) -> u8 {
    let (cfg, hash) = match load_config(path) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let spec = match cfg.to_problem() {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let opts = SolveOptions {
        solver: cfg.solver,
        jobs,
        cross_check,
        compatibility_tol: cfg.tol_compatibility,
    };
    let mut output = match pipeline::solve_problem(&spec, &opts) {
        Ok(output) => output,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    output.grid.provenance.config_hash = hash;

    let out_dir = resolve_out_dir(out, &cfg);
    let paths = match report::write_artifacts(
        &out_dir,
        &output,
        cfg.tol_mode_residual,
        cfg.tol_grid_residual,
    ) {
        Ok(paths) => paths,
        Err(e) => {
            eprintln!("error: cannot write artifacts to {}: {e}", out_dir.display());
            return 1;
        }
    };

    println!("wrote {}", paths.0.display());
    println!("wrote {}", paths.1.display());
    println!("wrote {}", paths.2.display());
    println!("mode residual sup = {}", output.residual.mode_sup);
    println!("grid residual sup = {}", output.residual.grid_sup);

    let mut status = 0u8;
    if !output.compatibility.pass {
        if strict {
            eprintln!("validation failed: forcing violates the compatibility conditions");
            status = 2;
        } else {
            eprintln!("warning: forcing violates the compatibility conditions (see verification.txt)");
        }
    }
    let residual_ok = output.residual.mode_sup <= cfg.tol_mode_residual
        && output.residual.grid_sup <= cfg.tol_grid_residual;
    if !residual_ok {
        eprintln!(
            "residual tolerances exceeded: mode {} (tol {}), grid {} (tol {})",
            output.residual.mode_sup,
            cfg.tol_mode_residual,
            output.residual.grid_sup,
            cfg.tol_grid_residual
        );
        status = 2;
    }
    status
}

fn cmd_validate(path: &PathBuf) -> u8 {
    let (cfg, _) = match load_config(path) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let spec = match cfg.to_problem() {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let report = match spectral::validate_compatibility(&spec.forcing, cfg.tol_compatibility) {
        Ok(report) => report,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    for cond in &report.conditions {
        println!(
            "{}: {} (max violation {})",
            cond.name,
            if cond.pass { "pass" } else { "FAIL" },
            cond.max_violation
        );
    }
    println!("overall: {}", if report.pass { "pass" } else { "FAIL" });
    if report.pass {
        0
    } else {
        2
    }
}
