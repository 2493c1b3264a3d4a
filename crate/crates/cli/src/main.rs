//! `warped-soliton`: checks, catalog emission, ODE integration and the
//! obstruction search from the command line.
//!
//! Exit codes: 0 pass, 1 residual failure, 2 usage or parse error,
//! 3 numeric failure.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{
    run_catalog, run_check, run_integrate, run_obstruction, CatalogArgs, CheckArgs, Format,
    IntegrateArgs, ObstructionArgs, Verdict,
};

#[derive(Debug, Parser)]
#[command(name = "warped-soliton", version, about = "Gradient Ricci solitons on multiply warped products")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate every residual of a spec file on a grid and classify it.
    Check {
        spec: PathBuf,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the spec file of a built-in solution.
    Catalog {
        /// gaussian, einstein_product, type_ii, type_iii or round_cone.
        id: String,
        #[arg(long, default_value_t = 4)]
        n: usize,
        /// Sphere dimension of the Euclidean factor (type_ii only).
        #[arg(long)]
        r: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        rho: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the soliton ODE from an initial-data config or a spec file.
    Integrate {
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        s0: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        s1: Option<f64>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Number of output samples.
        #[arg(long, default_value_t = 1001)]
        grid: usize,
        /// rk45 (adaptive) or rk4 (fixed step).
        #[arg(long, default_value = "rk45")]
        method: String,
        /// Largest step for rk4.
        #[arg(long)]
        step: Option<f64>,
        /// Trajectory CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Summary JSON path; stdout when the CSV goes to a file, stderr otherwise.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Seeded search for tuples with three distinct fiber eigenvalues.
    Obstruction {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        rho: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check {
            spec,
            grid,
            tol,
            format,
            out,
        } => run_check(CheckArgs {
            spec,
            grid: *grid,
            tol: *tol,
            format: *format,
            out: out.as_deref(),
        }),
        Command::Catalog { id, n, r, rho, out } => run_catalog(CatalogArgs {
            id,
            n: *n,
            r: *r,
            rho: *rho,
            out: out.as_deref(),
        }),
        Command::Integrate {
            config,
            s0,
            s1,
            tol,
            grid,
            method,
            step,
            out,
            summary,
        } => run_integrate(IntegrateArgs {
            config,
            s0: *s0,
            s1: *s1,
            tol: *tol,
            grid: *grid,
            method,
            step: *step,
            out: out.as_deref(),
            summary: summary.as_deref(),
        }),
        Command::Obstruction {
            n,
            rho,
            samples,
            seed,
            tol,
            out,
        } => run_obstruction(ObstructionArgs {
            n: *n,
            rho: *rho,
            samples: *samples,
            seed: *seed,
            tol: *tol,
            out: out.as_deref(),
        }),
    };
    match result {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
