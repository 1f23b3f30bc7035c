//! `jpm`: command-line front end for the photon-counter models.
//!
//! Rates are given in GHz (numerically equal to 1/ns) and the transition
//! frequency as ω_0/2π in GHz. Times are in ns.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{DriveArg, Format, MethodArg};

#[derive(Debug, Parser)]
#[command(name = "jpm", version, about = "Josephson photomultiplier photon-counter models")]
pub struct Cli {
    /// TOML file with [detector], [drive], [integrator] and [output] tables;
    /// command-line flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the mean-field equations and write the trajectory
    Simulate {
        #[command(flatten)]
        detector: DetectorArgs,
        #[command(flatten)]
        drive: DriveArgs,
        #[command(flatten)]
        integrator: IntegratorArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Evaluate an objective over a one- or two-dimensional parameter grid
    Sweep {
        /// Sweep description (TOML)
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        /// Evaluate cells on a single thread
        #[arg(long)]
        serial: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Find the coupling rate that maximises pm(t_m)
    Optimize {
        #[command(flatten)]
        detector: DetectorArgs,
        #[command(flatten)]
        drive: DriveArgs,
        #[command(flatten)]
        integrator: IntegratorArgs,
        /// Measurement time in ns
        #[arg(long, value_name = "NS")]
        t_m: f64,
        /// Photons delivered during t_m by a continuous drive (sets alpha_sq)
        #[arg(long, conflicts_with = "alpha_sq")]
        photons: Option<f64>,
        /// Grid points of the initial scan
        #[arg(long, default_value_t = 400)]
        grid_points: usize,
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Detection efficiency report of the rate model (JSON)
    Efficiency {
        #[command(flatten)]
        detector: DetectorArgs,
        /// Photon flux in photons/ns used for the bright count rate
        #[arg(long, default_value_t = 0.0)]
        flux: f64,
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Noise-equivalent power of the rate model (JSON)
    Nep {
        #[command(flatten)]
        detector: DetectorArgs,
        /// Use the reference parameter set: gamma_1 = 1 GHz, gamma_0 = 10 MHz,
        /// gamma_rel = 33 kHz, omega_0/2pi = 5 GHz, matched coupling
        #[arg(long)]
        reference: bool,
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Coupling rate that maximises the efficiency (JSON)
    Match {
        #[command(flatten)]
        detector: DetectorArgs,
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Laplace-domain reference results
    Analytic {
        #[command(subcommand)]
        which: AnalyticCommand,
    },
    /// Compare mean-field and rate-model pm(t) for a continuous drive
    Compare {
        #[command(flatten)]
        detector: DetectorArgs,
        /// Drive amplitude |alpha|^2
        #[arg(long)]
        alpha_sq: Option<f64>,
        #[command(flatten)]
        integrator: IntegratorArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum AnalyticCommand {
    /// Poles and residues of the continuous-drive pm transform
    Poles {
        #[command(flatten)]
        detector: DetectorArgs,
        /// Drive amplitude |alpha|^2
        #[arg(long)]
        alpha_sq: Option<f64>,
        /// Also evaluate pm(t) at these times (ns)
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
    },
    /// Stationary pm after an exponential pulse, from the series expansion
    ExpSteady {
        #[command(flatten)]
        detector: DetectorArgs,
        /// Mean photon number of the pulse
        #[arg(long)]
        alpha_sq: Option<f64>,
        /// Pulse decay rate in GHz
        #[arg(long)]
        kappa: Option<f64>,
        /// Series order (1 to 12)
        #[arg(long, default_value_t = 5)]
        order: usize,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct DetectorArgs {
    /// Coupling to the transmission line in GHz [default: 1]
    #[arg(long, value_name = "GHZ")]
    pub gamma_tl: Option<f64>,
    /// Excited-state tunneling rate in GHz [default: 1]
    #[arg(long = "gamma-1", value_name = "GHZ")]
    pub gamma_1: Option<f64>,
    /// Ground-state tunneling (dark count) rate in GHz [default: 0]
    #[arg(long = "gamma-0", value_name = "GHZ")]
    pub gamma_0: Option<f64>,
    /// Relaxation rate in GHz [default: 0]
    #[arg(long, value_name = "GHZ")]
    pub gamma_rel: Option<f64>,
    /// Reset rate in GHz [default: 0; 100 x gamma_1 for efficiency, nep, match]
    #[arg(long, value_name = "GHZ")]
    pub gamma_res: Option<f64>,
    /// Transition frequency omega_0/2pi in GHz [default: 5]
    #[arg(long = "omega0-ghz", value_name = "GHZ")]
    pub omega0_ghz: Option<f64>,
    /// Force gamma_0 = gamma_rel = 0
    #[arg(long)]
    pub ideal: bool,
    /// Set gamma_tl to the matching value sqrt((g1+grel)(g1+grel+g0))
    #[arg(long)]
    pub matched: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DriveArgs {
    /// Drive shape [default: continuous]
    #[arg(long, value_enum)]
    pub drive: Option<DriveArg>,
    /// Flux amplitude |alpha|^2 (continuous) or mean photon number (pulses) [default: 0]
    #[arg(long)]
    pub alpha_sq: Option<f64>,
    /// Exponential pulse decay rate in GHz
    #[arg(long, value_name = "GHZ")]
    pub kappa: Option<f64>,
    /// Gaussian pulse width parameter in GHz
    #[arg(long, value_name = "GHZ")]
    pub sigma: Option<f64>,
    /// Gaussian pulse centre in ns [default: 6/(sigma sqrt 2)]
    #[arg(long, value_name = "NS")]
    pub t0: Option<f64>,
    /// CSV file with columns t (ns) and f(t) for a tabulated pulse
    #[arg(long, value_name = "FILE")]
    pub table: Option<PathBuf>,
    /// Keep the unnormalised Gaussian prefactor instead of rescaling to unit norm
    #[arg(long)]
    pub paper_literal: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct IntegratorArgs {
    /// Integration method [default: rk45]
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Step size in ns for --method rk4
    #[arg(long, value_name = "NS")]
    pub rk4_step: Option<f64>,
    /// Relative tolerance [default: 1e-8]
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Absolute tolerance [default: 1e-10]
    #[arg(long)]
    pub abs_tol: Option<f64>,
    /// Largest adaptive step in ns
    #[arg(long, value_name = "NS")]
    pub max_step: Option<f64>,
    /// End time in ns [default: chosen from the drive and rates]
    #[arg(long, value_name = "NS")]
    pub t_end: Option<f64>,
    /// Number of output samples [default: 1001]
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Output file [default: stdout]
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Output format [default: csv]
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
