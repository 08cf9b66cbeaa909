//! `sbs`: run dynamical cases, Gaussian sweeps, objectivity checks and frame
//! transforms.
//!
//! Exit codes: 0 success, 1 a check failed, 2 invalid input, 3 numerical failure.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "SBS_OUTPUT_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "sbs",
    version,
    about = "Objectivity across quantum reference frames"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PresetArg {
    Paper,
    Desk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CheckKind {
    Theorem1,
    Prop1,
    Reduced,
    Injectivity,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve one dynamical case and write its time series.
    RunCase {
        /// Case id: 1.1 … 1.5, 2.1, 2.2, 3.1, 3.2 or 4.
        case: String,
        /// TOML config; flags given on the command line override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<PresetArg>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = OUTPUT_DIR_ENV, default_value = "sbs-out")]
        out: PathBuf,
    },
    /// Mean macrofraction fidelity over random Gaussian peak positions.
    GaussianSweep {
        /// Comma-separated spreads.
        #[arg(long, value_delimiter = ',')]
        sigmas: Option<Vec<f64>>,
        /// Comma-separated macrofraction sizes.
        #[arg(long, value_delimiter = ',')]
        fractions: Option<Vec<usize>>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = OUTPUT_DIR_ENV, default_value = "sbs-out")]
        out: PathBuf,
    },
    /// Verify objectivity conditions on a spec or state file.
    Check {
        /// Branch spec (theorem1, prop1), state file (reduced) or sampled maps (injectivity).
        spec: PathBuf,
        #[arg(long, value_enum)]
        which: CheckKind,
        #[arg(long, default_value_t = sbs_core::checkers::DEFAULT_TOL)]
        tol: f64,
        /// Frame for the reduced check.
        #[arg(long, default_value = "E1")]
        target: String,
        /// Subsystems traced out in the reduced check; defaults to the laboratory.
        #[arg(long, value_delimiter = ',')]
        trace: Option<Vec<String>>,
        /// Also write the report as TOML.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Rewrite a state file in the frame of another subsystem.
    Transform {
        state: PathBuf,
        /// Layout such as `S=12,E1=12,E2=12`; required if the file has none.
        #[arg(long)]
        layout: Option<String>,
        #[arg(long)]
        target: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    sbs_core::linalg::use_sequential_kernels();
    let argv: Vec<String> = std::env::args().collect();
    let result = match cli.command {
        Command::RunCase {
            case,
            config,
            preset,
            seed,
            out,
        } => commands::run_case(&argv, &case, config.as_deref(), preset, seed, &out),
        Command::GaussianSweep {
            sigmas,
            fractions,
            samples,
            seed,
            out,
        } => commands::gaussian_sweep(&argv, sigmas, fractions, samples, seed, &out),
        Command::Check {
            spec,
            which,
            tol,
            target,
            trace,
            report,
        } => commands::check(&spec, which, tol, &target, trace, report.as_deref()),
        Command::Transform {
            state,
            layout,
            target,
            out,
        } => commands::transform(&state, layout.as_deref(), &target, &out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
