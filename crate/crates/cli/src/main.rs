//! `bsym`: verify b-integrable systems, build action-angle charts and
//! trace Hamiltonian flows. Reports are JSON, traces are CSV.

mod commands;
mod source;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "bsym", version, about = "b-symplectic integrable systems toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the four defining conditions of a system.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Smallest singular value counted as independent.
        #[arg(long, default_value_t = 1e-8)]
        rank_tol: f64,
    },
    /// Build action-angle coordinates and check the normal form.
    ActionAngle {
        #[command(flatten)]
        common: Common,
        /// Interpolation nodes per transverse dimension for the lattice field.
        #[arg(long, default_value_t = 11)]
        nodes: usize,
        /// Points written to the chart export.
        #[arg(long, default_value_t = 50)]
        export_samples: usize,
    },
    /// Write flows of Hamiltonian fields as CSV.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Simulated time span.
        #[arg(long, default_value_t = 1.0)]
        time: f64,
        /// Initial point as a comma-separated list (default: chart centre).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Option<Vec<f64>>,
        /// 1-based integral indices to flow (default: all).
        #[arg(long, value_delimiter = ',')]
        integral: Option<Vec<usize>>,
    },
    /// Write a gallery entry as a descriptor JSON file.
    Export {
        #[command(flatten)]
        common: Common,
    },
    /// List gallery names.
    List,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Gallery entry, e.g. `standard_model:2,2,1` or `galilean:b_s1`.
    #[arg(long, conflicts_with = "file", required_unless_present = "file")]
    pub gallery: Option<String>,
    /// System descriptor JSON file.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Sample count (bulk points; half as many on Z; rows for traces).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Main tolerance of the command (involution, normal-form deviation or unused).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Outcome of a command: `Ok(true)` exits 0, `Ok(false)` exits 1.
pub enum Failure {
    /// Unreadable or invalid input.
    Input(anyhow::Error),
    Run(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Run(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify { common, rank_tol } => commands::verify(&common, rank_tol),
        Command::ActionAngle { common, nodes, export_samples } => commands::action_angle(&common, nodes, export_samples),
        Command::Trace { common, time, point, integral } => commands::trace(&common, time, point, integral),
        Command::Export { common } => commands::export(&common),
        Command::List => {
            for name in bsym::gallery::catalogue() {
                println!("{name}");
            }
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
