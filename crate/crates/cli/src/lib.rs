//! Command-line pipelines: simulate a stream, then analyse it with the
//! photonstats library. Every output file gets a `<file>.manifest.json`.
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use photonstats::interferometry::ShapeChoice;
use photonstats::Error;

mod commands;
mod output;

pub use output::{write_atomic, Manifest};

/// Exit status for anything not covered below.
pub const EXIT_GENERIC: u8 = 1;
/// Bad configuration, usage or channel selection.
pub const EXIT_CONFIG: u8 = 2;
/// Unreadable, unwritable or malformed files.
pub const EXIT_IO: u8 = 3;
/// Fewer than [`MIN_COINCIDENCES`] pairs in a correlation.
pub const EXIT_FEW_COINCIDENCES: u8 = 4;
/// The analysis itself failed (fit, normalisation, sampling).
pub const EXIT_ANALYSIS: u8 = 5;

/// Correlations with fewer pairs are refused.
pub const MIN_COINCIDENCES: u64 = 100;

/// An error carrying the process exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config { .. }
            | Error::InvalidParameter(_)
            | Error::UnknownChannel(_)
            | Error::NoSyncTags(_)
            | Error::NotPulsed
            | Error::OverlappingWindows { .. }
            | Error::UnknownModel(_)
            | Error::DuplicateModel(_) => EXIT_CONFIG,
            Error::Io(_) | Error::Format(_) | Error::Json(_) | Error::UnsortedGrid => EXIT_IO,
            Error::InvalidFit(_)
            | Error::Undersampled { .. }
            | Error::TooFewPeaks { .. }
            | Error::EmptySpectrum
            | Error::ZeroArea => EXIT_ANALYSIS,
        };
        CliError::new(code, e.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "photonstats",
    version,
    about = "Simulate and analyse single-photon emitter measurements"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a detection stream from a key=value config and write it as PTAG.
    Simulate(SimulateArgs),
    /// Second-order correlation of two channels.
    G2(G2Args),
    /// Decay histogram against the sync channel and exponential-with-IRF fit.
    Lifetime(LifetimeArgs),
    /// Multi-Lorentzian decomposition of a spectrum and its Debye-Waller factor.
    Fitspec(FitspecArgs),
    /// Saturation fit of count rate versus pump power.
    Saturation(SaturationArgs),
    /// Michelson interferogram of a spectrum, fringe visibility and envelope fit.
    Michelson(MichelsonArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output PTAG file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum G2Mode {
    Cw,
    Pulsed,
}

#[derive(Debug, Args)]
pub struct G2Args {
    /// Input PTAG file.
    #[arg(long)]
    pub input: PathBuf,
    /// Normalised histogram CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the JSON summary here (it always goes to standard output).
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "cw")]
    pub mode: G2Mode,
    /// Start and stop channels.
    #[arg(long, num_args = 2, value_names = ["A", "B"], default_values_t = [0u8, 1u8])]
    pub channels: Vec<u8>,
    /// Bin width in ns.
    #[arg(long, default_value_t = 0.1)]
    pub bin: f64,
    /// Half window in ns (pulsed default: ten repetition periods).
    #[arg(long)]
    pub window: Option<f64>,
    /// Repetition period in ns (pulsed mode).
    #[arg(long)]
    pub rep_period: Option<f64>,
    /// Peaks either side of zero left out of the pulsed normalisation.
    #[arg(long, default_value_t = 0)]
    pub exclude: usize,
    /// CW only: fold onto |τ| and append this many octaves of doubling bins.
    #[arg(long)]
    pub octaves: Option<u32>,
    /// Fit the three-level model (CW mode).
    #[arg(long)]
    pub fit: bool,
}

#[derive(Debug, Args)]
pub struct LifetimeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Decay histogram CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Detector channel.
    #[arg(long, default_value_t = 0)]
    pub channel: u8,
    /// Sync channel (default: the highest channel).
    #[arg(long)]
    pub sync_channel: Option<u8>,
    /// Bin width in ns.
    #[arg(long, default_value_t = 0.016)]
    pub bin: f64,
    /// Time before each sync included in the histogram, in ns.
    #[arg(long, default_value_t = 1.0)]
    pub pre_trigger: f64,
    /// Instrument response FWHM in ps (0 for an ideal detector).
    #[arg(long, default_value_t = 0.0)]
    pub irf_fwhm_ps: f64,
}

#[derive(Debug, Args)]
pub struct FitspecArgs {
    /// Spectrum CSV (`energy_eV,counts`) or parametric JSON (`.json`).
    #[arg(long)]
    pub input: PathBuf,
    /// Data and fitted model CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    pub max_components: usize,
}

#[derive(Debug, Args)]
pub struct SaturationArgs {
    /// CSV with header `power_mW,rate_Hz` and an optional `sigma_Hz` column.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Lifetime used to report the source-to-detector efficiency, in ns.
    #[arg(long)]
    pub t1_ns: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Shape {
    Exp,
    Gauss,
    Auto,
}

impl From<Shape> for ShapeChoice {
    fn from(s: Shape) -> Self {
        match s {
            Shape::Exp => ShapeChoice::Exponential,
            Shape::Gauss => ShapeChoice::Gaussian,
            Shape::Auto => ShapeChoice::Auto,
        }
    }
}

#[derive(Debug, Args)]
pub struct MichelsonArgs {
    /// Spectrum CSV (`energy_eV,counts`) or parametric JSON (`.json`).
    #[arg(long)]
    pub input: PathBuf,
    /// Interferogram CSV; the visibility trace goes next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Pass only energies below this edge (eV).
    #[arg(long)]
    pub lowpass_ev: Option<f64>,
    /// Pass only energies above this edge (eV).
    #[arg(long)]
    pub highpass_ev: Option<f64>,
    #[arg(long, value_enum, default_value = "exp")]
    pub shape: Shape,
    /// Mode overlap of the interferometer arms.
    #[arg(long, default_value_t = 1.0)]
    pub v0: f64,
    /// Longest delay scanned, in fs.
    #[arg(long, default_value_t = 1200.0)]
    pub max_delay_fs: f64,
    /// Delay samples per fringe period.
    #[arg(long, default_value_t = 16)]
    pub points_per_fringe: usize,
    /// Dephasing time reported as T2* from the fitted T2 using this lifetime, in ns.
    #[arg(long)]
    pub t1_ns: Option<f64>,
}

/// Applies `PHOTONSTATS_THREADS` to the global thread pool.
pub fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("PHOTONSTATS_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::new(
            EXIT_CONFIG,
            format!("PHOTONSTATS_THREADS must be a positive integer, got `{value}`"),
        )
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::new(EXIT_GENERIC, e.to_string()))
}

/// Runs one command and returns its JSON summary.
pub fn run(cli: Cli) -> CliResult<serde_json::Value> {
    match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::G2(a) => commands::g2(&a),
        Command::Lifetime(a) => commands::lifetime(&a),
        Command::Fitspec(a) => commands::fitspec(&a),
        Command::Saturation(a) => commands::saturation(&a),
        Command::Michelson(a) => commands::michelson(&a),
    }
}

/// Parses arguments, runs, prints the summary and maps failures to exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    let outcome = configure_threads().and_then(|_| run(cli));
    match outcome {
        Ok(summary) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).expect("JSON values serialise")
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
