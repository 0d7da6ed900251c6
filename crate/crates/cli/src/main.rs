//! `qalctl`: compile circuits, drive the virtual device, run latency benches.
//!
//! Exit status is 0 on success, 1 on a domain error and 2 on a usage error.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Format, ModeArg};

#[derive(Debug, Parser)]
#[command(
    name = "qalctl",
    version,
    about = "Operator tool for the virtual quantum accelerator"
)]
pub struct Cli {
    /// TOML file with device and output settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for the device's measurement sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    /// Job store carried between invocations.
    #[arg(long, global = true, default_value = "qalctl-session.json")]
    session: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assemble a .qalt file into .qalb.
    Compile {
        input: PathBuf,
        /// Defaults to the input path with a .qalb extension.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print a .qalb file as canonical .qalt text.
    Disasm {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Queue a circuit (.qalb or .qalt). With --wait, run it and print the histogram.
    Submit {
        file: PathBuf,
        #[arg(long, default_value_t = 1024, value_parser = clap::value_parser!(u64).range(1..=u32::MAX as u64))]
        shots: u64,
        /// 0 (highest) to 7.
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u8).range(0..=7))]
        priority: u8,
        #[arg(long)]
        wait: bool,
    },
    /// Print a job's state without running anything.
    Status { job: u64 },
    /// Run queued work until the job finishes, then print its histogram.
    Results {
        job: u64,
        /// Give up after this many milliseconds.
        #[arg(long)]
        timeout_ms: Option<u64>,
    },
    /// Cancel a queued job.
    Cancel { job: u64 },
    /// Describe the configured device.
    DeviceInfo,
    /// Profile `count` copies of a circuit on a latency-mode device.
    Bench {
        file: PathBuf,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..=u32::MAX as u64))]
        shots: u64,
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=7))]
        priority: u8,
        /// Timing model file, overriding the config.
        #[arg(long)]
        timing: Option<PathBuf>,
        /// Write the report here (CSV with --format csv, JSON otherwise).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qalctl: error: {e}");
            ExitCode::from(1)
        }
    }
}
