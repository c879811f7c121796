//! `catpacket`: delay sweeps, barrier scans, waveforms, resonance fits and
//! analytic comparisons, driven by JSON configs and written as CSV/JSON.
//!
//! Exit status: 0 success, 1 invalid input, 2 numerical failure. Errors are
//! reported on stderr as a single `code=... kind=...` line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] catpacket_core::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        use catpacket_core::Error as E;
        match self {
            CliError::Core(
                E::Accuracy { .. } | E::DegenerateNormalization(_) | E::InsufficientData(_),
            ) => 2,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        use catpacket_core::Error as E;
        match self {
            CliError::Config { .. } => "config",
            CliError::Io { .. } => "io",
            CliError::Core(e) => match e {
                E::InvalidParameter { .. } | E::Argument(_) | E::Domain { .. } => "validation",
                E::Unsupported(_) => "unsupported",
                E::Accuracy { .. } => "accuracy",
                E::DegenerateNormalization(_) => "degenerate_normalization",
                E::InsufficientData(_) => "insufficient_data",
            },
        }
    }

    /// `code=N kind=K [tau=T] message="..."`
    fn report_line(&self) -> String {
        let mut line = format!("code={} kind={}", self.code(), self.kind());
        if let CliError::Core(catpacket_core::Error::Accuracy { tau: Some(t), .. }) = self {
            line.push_str(&format!(" tau={t}"));
        }
        line.push_str(&format!(" message={:?}", self.to_string()));
        line
    }
}

#[derive(Debug, Parser)]
#[command(name = "catpacket", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file (CSV, or JSON for `resonances` and `compare`).
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; defaults to one per core.
    #[arg(long, env = "CATPACKET_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    #[arg(long)]
    verbose: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// P^T, P^T_ind and δP^T over a delay grid, plus a diagnostics JSON.
    Sweep(Common),
    /// |T(p)|² and |A(p)|² across the momentum window.
    BarrierScan(Common),
    /// Transmitted mode behind a single resonance (massless particle).
    Waveform(Common),
    /// Resonances of a piecewise-constant potential.
    Resonances(Common),
    /// Quadrature against the Breit-Wigner closed forms.
    Compare(Common),
}

type Runner = fn(&Path, &Path) -> Result<(), CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            eprintln!("code=1 kind=usage message={:?}", e.kind().to_string());
            return ExitCode::from(1);
        }
    };
    let (common, run): (&Common, Runner) = match &cli.command {
        Command::Sweep(c) => (c, commands::sweep),
        Command::BarrierScan(c) => (c, commands::barrier_scan),
        Command::Waveform(c) => (c, commands::waveform),
        Command::Resonances(c) => (c, commands::resonances),
        Command::Compare(c) => (c, commands::compare),
    };

    env_logger::Builder::new()
        .filter_level(if common.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .parse_default_env()
        .init();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.threads {
        pool = pool.num_threads(n as usize);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("code=1 kind=threads message={:?}", e.to_string());
            return ExitCode::from(1);
        }
    };

    match pool.install(|| run(&common.config, &common.out)) {
        Ok(()) => {
            log::info!("wrote {}", common.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.report_line());
            ExitCode::from(e.code())
        }
    }
}
