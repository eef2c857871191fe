mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Exit codes: 2 config/parse error, 3 zero-probability herald,
/// 4 rank-deficient fit.
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_ZERO_HERALD: u8 = 3;
pub const EXIT_RANK_DEFICIENT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "noon",
    version,
    about = "Heralded photonic NOON-state experiment simulator",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset scan and write the fringe table CSV plus a run manifest.
    Simulate {
        /// Experiment config (JSON); defaults describe the paper's hardware.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Skip Monte Carlo sampling; emit analytic rates only.
        #[arg(long)]
        analytic_only: bool,
        /// Override pulses per scan point.
        #[arg(long)]
        pulses: Option<u64>,
    },
    /// Fit one fringe-table column at a fixed frequency.
    Fit {
        /// Fringe table CSV produced by `simulate`.
        csv: PathBuf,
        /// Column to fit.
        #[arg(long, default_value = "p_fourfold")]
        column: String,
        /// Fringe frequency in phase units.
        #[arg(long, short = 'k')]
        frequency: u32,
        /// Weighting: poisson or uniform.
        #[arg(long, default_value = "uniform")]
        weights: String,
    },
    /// Figure of merit P(N_ex=0)/P(N_ex>0) for a source scheme.
    Fom {
        /// Scheme: double-pair or pair-plus-coherent.
        #[arg(long, default_value = "double-pair")]
        scheme: String,
        #[arg(long)]
        gamma: f64,
        /// Coherent mean photon number (pair-plus-coherent only).
        #[arg(long)]
        alpha: Option<f64>,
        /// exact or approx.
        #[arg(long, default_value = "approx")]
        mode: String,
    },
    /// Subtract the estimated triple-pair background from a fringe table.
    BackgroundSubtract {
        csv: PathBuf,
        /// Measured herald singles probability (SPC1 clicks per pulse).
        #[arg(long)]
        herald_singles_prob: f64,
        /// Output CSV path (defaults to `<input>.corrected.csv`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// HOM interferometry scan over path delays.
    Hom {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// HWP2 calibration scan of the fourfold signal.
    Hwp2Cal {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// List presets and the shipped default configuration.
    Presets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, out, seed, analytic_only, pulses } => {
            commands::simulate(config.as_deref(), &out, seed, analytic_only, pulses)
        }
        Command::Fit { csv, column, frequency, weights } => {
            commands::fit(&csv, &column, frequency, &weights)
        }
        Command::Fom { scheme, gamma, alpha, mode } => {
            commands::fom(&scheme, gamma, alpha, &mode)
        }
        Command::BackgroundSubtract { csv, herald_singles_prob, out } => {
            commands::background_subtract(&csv, herald_singles_prob, out.as_deref())
        }
        Command::Hom { config, out } => commands::hom(config.as_deref(), &out),
        Command::Hwp2Cal { config, out } => commands::hwp2_cal(config.as_deref(), &out),
        Command::Presets => commands::presets(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
