//! Batch runner for the `arqkey` library.
//!
//! Every subcommand resolves each setting from its flag, else the
//! `--config` file, else a default, and writes a self-describing table
//! (CSV or a JSON summary) to `--out` or standard output.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

mod commands;
pub mod report;
pub mod settings;

use settings::{Format, Settings};

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const IO: i32 = 3;
    pub const INFEASIBLE: i32 = 4;
    pub const VERIFICATION: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Io { .. } => exit::IO,
            CliError::Infeasible(_) => exit::INFEASIBLE,
            CliError::Verification(_) => exit::VERIFICATION,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "arqkey",
    version,
    about = "ARQ secret key sharing over block-fading wiretap channels"
)]
pub struct Cli {
    /// Base seed for every random stream [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// Output file [default: standard output].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// `csv` or `summary` (JSON) [default: per command].
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// `key = value` file; flags override it, it overrides defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimized secrecy rates C_s and C_e against SNR.
    Capacity(CapacityArgs),
    /// Outage probability against key rate for k = 1, 2, ...
    Outage(OutageArgs),
    /// Frame-level protocol simulation compared against the closed forms.
    Simulate(SimulateArgs),
    /// Finite-length key rate of coded and uncoded packet schemes.
    Fec(FecArgs),
    /// Re-derive statistics and check thresholds from a trace file.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    /// SNR sweep in dB, e.g. `0:2:40` or `0,10,20` [default: 0:2:40].
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<String>,
    /// Genie side-information rates [default: 0,3,7].
    #[arg(long)]
    pub rc: Option<String>,
    /// Largest transmission rate searched [default: 25].
    #[arg(long)]
    pub r0_max: Option<String>,
    /// Coarse rate grid size [default: 500].
    #[arg(long)]
    pub r0_steps: Option<String>,
}

#[derive(Debug, Args)]
pub struct OutageArgs {
    /// Transmission rates [default: 4,6,7,8].
    #[arg(long)]
    pub r0: Option<String>,
    /// Side-information rates [default: 2].
    #[arg(long)]
    pub rc: Option<String>,
    /// Average SNR in dB [default: 30].
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<String>,
    /// Stop each curve once P_out reaches this [default: 1e-6].
    #[arg(long)]
    pub target: Option<String>,
    /// Largest k tried per curve [default: 1000000].
    #[arg(long)]
    pub k_cap: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Transmission rate [default: 4].
    #[arg(long)]
    pub r0: Option<String>,
    /// Side-information rate [default: 2].
    #[arg(long)]
    pub rc: Option<String>,
    /// Transmit SNR in dB [default: 30].
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<String>,
    /// Key parts per exchange [default: 10].
    #[arg(long)]
    pub k: Option<String>,
    /// Independent exchanges [default: 10000].
    #[arg(long)]
    pub exchanges: Option<String>,
    /// Bits per key part [default: 128].
    #[arg(long)]
    pub payload_bits: Option<String>,
    /// Frames before an exchange is abandoned [default: 1000 k].
    #[arg(long)]
    pub max_frames: Option<String>,
    /// Bob's mean channel gain [default: 1].
    #[arg(long)]
    pub mean_gain_bob: Option<String>,
    /// Eve's mean channel gain [default: 1].
    #[arg(long)]
    pub mean_gain_eve: Option<String>,
    /// Also write every frame to this trace file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Exit with status 5 if any |z| exceeds 3.
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Args)]
pub struct FecArgs {
    /// Packet schemes [default: uncoded-bpsk, coded-bpsk and coded-qpsk at 240 and 480 bits].
    #[arg(long)]
    pub schemes: Option<String>,
    /// SNR sweep in dB [default: -20:5:40].
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<String>,
    /// Packets per (scheme, SNR) point, at least 10000 [default: 10000].
    #[arg(long)]
    pub trials: Option<String>,
    /// Required probability that Eve holds every part [default: 1e-10].
    #[arg(long)]
    pub target: Option<String>,
    /// Symbols the Genie corrects for Eve [default: 50].
    #[arg(long)]
    pub genie_budget: Option<String>,
    /// `post` (accept after decoding) or `pre` (repair before decoding) [default: post].
    #[arg(long)]
    pub genie: Option<String>,
    /// `soft` or `hard` Viterbi metrics [default: soft].
    #[arg(long)]
    pub decision: Option<String>,
    /// `1/2`, `2/3` or `3/4` [default: 1/2].
    #[arg(long)]
    pub puncture: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Trace file written by `simulate --trace`.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

/// Parses `args`, runs the command and returns the exit status. Errors
/// are reported on standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
        }
    };
    match execute(&cli) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("arqkey: {e}");
            e.exit_code()
        }
    }
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub(crate) struct Common {
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let settings = match &cli.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    let default_format = match cli.command {
        Command::Simulate(_) | Command::Replay(_) => Format::Summary,
        _ => Format::Csv,
    };
    let common = Common {
        seed: settings.get("seed", cli.seed.as_deref(), 0)?,
        format: settings.get("format", cli.format.as_deref(), default_format)?,
        out: match &cli.out {
            Some(p) => {
                settings.optional::<PathBuf>("out", None)?;
                Some(p.clone())
            }
            None => settings.optional("out", None)?,
        },
    };
    let outcome = match &cli.command {
        Command::Capacity(a) => commands::capacity(&common, &settings, a)?,
        Command::Outage(a) => commands::outage(&common, &settings, a)?,
        Command::Simulate(a) => commands::simulate(&common, &settings, a)?,
        Command::Fec(a) => commands::fec(&common, &settings, a)?,
        Command::Replay(a) => commands::replay(&common, &settings, a)?,
    };
    let text = outcome.report.render(common.format);
    match &common.out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?,
        None => print!("{text}"),
    }
    outcome.status
}

/// A report to write plus the command's verdict on it.
pub(crate) struct Outcome {
    pub report: report::Report,
    pub status: Result<(), CliError>,
}
