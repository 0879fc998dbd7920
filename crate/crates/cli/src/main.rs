//! `decaylab` command-line tool.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod failure;
mod plots;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use decaylab::config::DosKind;
use decaylab::models::Differentiation;

use commands::DosArgs;
use failure::{Failure, EXIT_NUMERIC};
use settings::{RunArgs, RunConfig};

#[derive(Parser)]
#[command(
    name = "decaylab",
    version,
    about = "Survival probabilities of unstable states"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    /// Beth-Uhlenbeck: (2l+1)/π dδ/dE.
    Bu,
    /// Dwell time with the Re T correction.
    Dwell,
}

#[derive(Clone, Copy, ValueEnum)]
enum Diff {
    Spline,
    Fd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Survival curve of one model: curve.csv, curve_meta.txt, plot_fig1.gp.
    Curve(RunArgs),
    /// Breit-Wigner scan over R values or a pole list: scan.csv, per-entry curves, scan_overlay.gp.
    Scan {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated R = Γ_R/(E_R - E_th) values.
        #[arg(long, value_delimiter = ',', conflicts_with = "poles")]
        r_values: Option<Vec<f64>>,
        /// Pole list CSV with header label,E_R_GeV,Gamma_R_GeV.
        #[arg(long, value_name = "FILE")]
        poles: Option<PathBuf>,
    },
    /// Oracle and invariant checks on a model; exit 1 if any fails.
    Verify(RunArgs),
    /// Density of states from a phase-shift table: dos.csv.
    Dos {
        /// Phase-shift model file.
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
        /// Phase-shift table CSV with header E_GeV,delta_rad,reT (reT may be left empty).
        #[arg(long, value_name = "FILE")]
        table: Option<PathBuf>,
        /// Partial wave.
        #[arg(long)]
        l: Option<u32>,
        #[arg(long, value_enum)]
        method: Option<Method>,
        #[arg(long, value_enum)]
        diff: Option<Diff>,
        #[arg(long, value_name = "DIR")]
        outdir: Option<PathBuf>,
    },
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("DECAYLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::usage(format!(
            "DECAYLAB_THREADS = '{v}' is not a positive integer"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::numeric(format!("cannot size the thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Cmd::Curve(args) => commands::curve(&RunConfig::resolve(&args)?),
        Cmd::Scan {
            run,
            r_values,
            poles,
        } => commands::scan(&RunConfig::resolve(&run)?, r_values, poles),
        Cmd::Verify(args) => {
            if commands::verify(&RunConfig::resolve(&args)?)? {
                Ok(())
            } else {
                Err(Failure {
                    code: EXIT_NUMERIC,
                    msg: String::new(),
                })
            }
        }
        Cmd::Dos {
            model,
            table,
            l,
            method,
            diff,
            outdir,
        } => commands::dos(&DosArgs {
            model,
            table,
            l,
            method: method.map(|m| match m {
                Method::Bu => DosKind::BethUhlenbeck,
                Method::Dwell => DosKind::DwellTime,
            }),
            diff: diff.map(|d| match d {
                Diff::Spline => Differentiation::Spline,
                Diff::Fd => Differentiation::FiniteDifference,
            }),
            outdir,
        }),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.msg.is_empty() {
                eprintln!("error: {}", f.msg);
            }
            ExitCode::from(f.code)
        }
    }
}
