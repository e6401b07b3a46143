//! Command-line experiment runner for the `blindsnr` estimators.
//!
//! Every experiment writes a long-format CSV (see [`output::COLUMNS`]) and,
//! with `--summary`, a JSON document of pass/fail assertions.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{Experiment, Family, RawConfig, SweepConfig};
pub use error::CliError;
pub use experiments::{run, Report};

#[derive(Debug, Parser)]
#[command(
    name = "blindsnr",
    version,
    about = "Blind SNR and MSE estimation experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimator statistics across SNR points.
    SweepSnr(Flags),
    /// Estimator statistics across activity rates.
    SweepP(Flags),
    /// Estimator statistics across dimensions.
    SweepDim(Flags),
    /// Exact median and noise-power bounds on a (p, SNR) grid.
    Bounds(Flags),
    /// Beamspace channel-denoising MSE.
    ChannelMse(Flags),
    /// Uncoded 16-QAM bit-error rate with LMMSE detection.
    ChannelBer(Flags),
}

impl Command {
    pub fn split(&self) -> (Experiment, &Flags) {
        match self {
            Command::SweepSnr(f) => (Experiment::SweepSnr, f),
            Command::SweepP(f) => (Experiment::SweepP, f),
            Command::SweepDim(f) => (Experiment::SweepDim, f),
            Command::Bounds(f) => (Experiment::BoundsGrid, f),
            Command::ChannelMse(f) => (Experiment::ChannelMse, f),
            Command::ChannelBer(f) => (Experiment::ChannelBer, f),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    #[arg(long)]
    pub trials: Option<String>,
    #[arg(long)]
    pub dim: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub n0: Option<String>,
    /// Comma-separated SNR points in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write `<out>.summary.json` (or print to stderr) and exit 3 if
    /// any assertion fails.
    #[arg(long)]
    pub summary: bool,
    /// key=value settings file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated subset of blind, em, genie.
    #[arg(long)]
    pub estimators: Option<String>,
    /// Comma-separated activity rates for sweep-p and bounds.
    #[arg(long)]
    pub p_list: Option<String>,
    /// Comma-separated dimensions for sweep-dim.
    #[arg(long)]
    pub dim_list: Option<String>,
    /// Users in channel experiments.
    #[arg(long)]
    pub users: Option<String>,
    /// Propagation paths per user in channel experiments.
    #[arg(long)]
    pub paths: Option<String>,
}

impl Flags {
    pub fn to_raw(&self) -> Result<RawConfig, CliError> {
        let mut raw = match &self.config {
            Some(path) => RawConfig::read_file(path)?,
            None => RawConfig::default(),
        };
        let mut over = RawConfig::default();
        let pairs = [
            ("trials", &self.trials),
            ("dim", &self.dim),
            ("p", &self.p),
            ("n0", &self.n0),
            ("snr_db", &self.snr_db),
            ("seed", &self.seed),
            ("estimators", &self.estimators),
            ("p_list", &self.p_list),
            ("dim_list", &self.dim_list),
            ("users", &self.users),
            ("paths", &self.paths),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                over.set(key, v)?;
            }
        }
        if let Some(out) = &self.out {
            over.set("out", &out.to_string_lossy())?;
        }
        if self.summary {
            over.set("summary", "true")?;
        }
        raw.merge(over);
        Ok(raw)
    }
}

pub fn summary_path(out: &std::path::Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".summary.json");
    PathBuf::from(s)
}

fn write_to(path: &std::path::Path, bytes: &[u8]) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

/// Runs one experiment end to end and returns the process exit code.
pub fn execute(cfg: &SweepConfig) -> Result<i32, CliError> {
    let report = run(cfg)?;
    let mut csv = Vec::new();
    output::write_csv(&report.rows, &mut csv)
        .map_err(|e| CliError::io(std::path::Path::new("<csv>"), io::Error::other(e)))?;

    match &cfg.output_path {
        Some(path) => write_to(path, &csv)?,
        None => io::stdout()
            .write_all(&csv)
            .map_err(|e| CliError::io(std::path::Path::new("<stdout>"), e))?,
    }

    if !cfg.summary {
        return Ok(0);
    }
    let doc = output::summary_json(cfg.experiment.name(), &report.assertions);
    let text = serde_json::to_string_pretty(&doc).expect("summary is plain JSON") + "\n";
    match &cfg.output_path {
        Some(path) => write_to(&summary_path(path), text.as_bytes())?,
        None => eprint!("{text}"),
    }
    Ok(if report.assertions.iter().all(|a| a.passed) {
        0
    } else {
        3
    })
}

/// Parses arguments, runs, and maps every outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (experiment, flags) = cli.command.split();
    let result = flags
        .to_raw()
        .and_then(|raw| raw.resolve(experiment))
        .and_then(|cfg| execute(&cfg));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
