mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mompca::Error;

#[derive(Parser, Debug)]
#[command(name = "mompca", version, about = "Median-of-means aggregation of distributed PCA estimates")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "MOMPCA_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value_t = mompca::geometry::DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// fixed:<alpha>, rpca or optimal.
    #[arg(long, global = true, default_value = "rpca")]
    pub alpha_mode: String,
    /// Step of the alpha grid used by the optimal mode.
    #[arg(long, global = true, default_value_t = 0.05)]
    pub grid_step: f64,
    /// Monte Carlo draws for covariance estimates.
    #[arg(long, global = true, default_value_t = 200_000)]
    pub mc_samples: usize,
    /// Output file; stdout when omitted (no manifest is written then).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Treat solver non-convergence as a failure.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Repair non-orthonormal bases by QR instead of rejecting them.
    #[arg(long, global = true)]
    pub reorthonormalize: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Shard a data matrix and compute node PCA estimates.
    NodePca(commands::NodePcaArgs),
    /// Aggregate node estimates with the scaled median-of-means.
    Aggregate(commands::EstimatesArgs),
    /// Report the calibrated scale and its diagnostics.
    Calibrate(commands::EstimatesArgs),
    /// Median covariance V_alpha from node estimates or a Gaussian model.
    Covariance(commands::CovarianceArgs),
    /// Node bootstrap intervals.
    Bootstrap(commands::BootstrapArgs),
    /// Run a simulation experiment from a TOML config.
    Simulate(commands::SimulateArgs),
    /// Factorwise influence scores of each node.
    Influence(commands::EstimatesArgs),
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) | Error::UnsupportedDimension { .. } => 1,
        Error::Numerical(_)
        | Error::SingularDerivative { .. }
        | Error::SingularEigengap { .. }
        | Error::OutOfNeighborhood { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let g = cli.global;
    if let Some(t) = g.threads {
        if let Err(e) = mompca::par::set_threads(t) {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::NodePca(a) => commands::node_pca(&g, &a),
        Command::Aggregate(a) => commands::aggregate(&g, &a),
        Command::Calibrate(a) => commands::calibrate(&g, &a),
        Command::Covariance(a) => commands::covariance(&g, &a),
        Command::Bootstrap(a) => commands::bootstrap(&g, &a),
        Command::Simulate(a) => commands::simulate(&g, &a),
        Command::Influence(a) => commands::influence(&g, &a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
