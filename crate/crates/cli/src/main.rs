use std::path::PathBuf;
use std::process::ExitCode;

use breatherlab::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "breatherlab", version, about = "Perturbations of the Stokes wave of focusing NLS")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// TOML experiment configuration; defaults suited to the subcommand otherwise
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` of the config)
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps; 0 uses all cores
    #[arg(long, global = true, env = "BREATHERLAB_WORKERS", default_value_t = 0)]
    pub workers: usize,
    /// Seed for random initial data and property checks
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Drop the nonlinearity (G = 0)
    #[arg(long, global = true)]
    pub linear: bool,
    /// Zero the mean of Re w after every step
    #[arg(long, global = true)]
    pub project_mean: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one trajectory and write diagnostics, fields and checkpoints
    Simulate,
    /// Fit growth rates / oscillation frequencies of single modes
    GrowthScan {
        /// Wavenumbers, comma separated; must be multiples of 2 pi / L
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<f64>>,
        #[arg(long)]
        amplitude: Option<f64>,
    },
    /// Small Peregrine data at -T reaching the O(1) profile at t = 0
    PeregrineInstability {
        /// Horizons T, comma separated
        #[arg(long, value_delimiter = ',')]
        horizons: Option<Vec<f64>>,
    },
    /// Separation of a Kuznetsov-Ma run from a perturbed copy
    KmInstability {
        #[arg(long)]
        a: Option<f64>,
        /// Multiplier of the Peregrine perturbation (0 gives the control run)
        #[arg(long)]
        scale: Option<f64>,
    },
    /// Run the property suite; exits 1 on any violation
    CheckInvariants {
        /// Evaluate the kernels without their small-mu series branch
        #[arg(long)]
        inject_fault: bool,
    },
    /// Tabulate a breather on a grid
    BreatherEval {
        #[arg(long, value_enum, default_value_t = BreatherArg::Peregrine)]
        breather: BreatherArg,
        /// Breather parameter (Kuznetsov-Ma: a > 1/2, Akhmediev: 0 < a < 1/2)
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t: f64,
        #[arg(long)]
        length: Option<f64>,
        #[arg(long, default_value_t = 512)]
        points: usize,
    },
    /// Render a CSV produced by another subcommand as PNG
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, value_enum)]
        kind: PlotArg,
        /// Image path; defaults to `<out>/<kind>.png`
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BreatherArg {
    Stokes,
    Peregrine,
    KuznetsovMa,
    Akhmediev,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PlotArg {
    Heatmap,
    Norms,
    Growth,
}

/// 0 success, 1 other failure, 2 blow-up, 3 invalid configuration, 4 Picard divergence.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BlowupDetected { .. } => 2,
        Error::PicardDivergence { .. } => 4,
        Error::Config(_)
        | Error::Schema(_)
        | Error::InvalidGrid(_)
        | Error::InvalidParameter(_)
        | Error::NegativeSobolevIndex(_)
        | Error::FrequencyNotRepresentable { .. }
        | Error::Checkpoint(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let result = match cli.command {
        Command::Simulate => commands::simulate(g),
        Command::GrowthScan { k, amplitude } => commands::growth_scan(g, k, amplitude),
        Command::PeregrineInstability { horizons } => commands::peregrine_instability(g, horizons),
        Command::KmInstability { a, scale } => commands::km_instability(g, a, scale),
        Command::CheckInvariants { inject_fault } => commands::check_invariants(g, inject_fault),
        Command::BreatherEval { breather, a, t, length, points } => {
            commands::breather_eval(g, breather, a, t, length, points)
        }
        Command::Plot { csv, kind, output } => commands::plot(g, &csv, kind, output),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
