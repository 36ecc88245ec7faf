use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cryomux_cli::{cmd_budget, cmd_compare, cmd_fit_noise, cmd_rf_report, cmd_simulate, CliError};
use cryomux_core::config::OutputFormat;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

/// Simulate and analyze qubit characterization through a cryogenic RF multiplexer.
///
/// Set CRYOMUX_LOG (error, warn, info, debug, trace) for diagnostics on stderr.
#[derive(Debug, Parser)]
#[command(name = "cryomux", version)]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the configured RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for artifacts and the manifest.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Table format for written artifacts.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run reference/mux coherence campaigns and a flux sweep.
    Simulate,
    /// Extract flux-noise amplitudes from a dispersion table.
    FitNoise {
        /// CSV with columns dispersion_hz_per_phi0 and gamma_phi_e_hz.
        input: PathBuf,
        /// Sweet-spot dephasing rate [1/s]; defaults to the row of smallest |dispersion|.
        #[arg(long)]
        sweet_spot_rate: Option<f64>,
    },
    /// Welch comparison of reference and mux campaign tables.
    Compare {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        mux: PathBuf,
    },
    /// Mixing-chamber power budget.
    Budget,
    /// Insertion loss and isolation on a frequency grid.
    RfReport {
        /// Lowest frequency [Hz].
        #[arg(long, default_value_t = 1e9)]
        fmin: f64,
        /// Highest frequency [Hz].
        #[arg(long, default_value_t = 8e9)]
        fmax: f64,
        #[arg(long, default_value_t = 29)]
        points: usize,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let out_dir = cli.out_dir.as_deref();
    let config = cli.config.as_deref();
    let format = cli.format.map(OutputFormat::from);
    match cli.command {
        Command::Simulate => {
            let config = config.ok_or_else(|| CliError::Usage("simulate requires --config".into()))?;
            for path in cmd_simulate(config, cli.seed, out_dir, format)? {
                println!("{}", path.display());
            }
        }
        Command::FitNoise { input, sweet_spot_rate } => print!("{}", cmd_fit_noise(&input, sweet_spot_rate, out_dir)?),
        Command::Compare { reference, mux } => print!("{}", cmd_compare(&reference, &mux, config, out_dir)?),
        Command::Budget => print!("{}", cmd_budget(config, out_dir)?),
        Command::RfReport { fmin, fmax, points } => {
            print!("{}", cmd_rf_report(config, fmin, fmax, points, format.unwrap_or_default(), out_dir)?)
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CRYOMUX_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
