//! `afford`: train interaction descriptors, detect them in scenes, and
//! generate the synthetic fixtures both run on.
//!
//! Exit status: 0 on success, 2 on invalid arguments or input files, 3 when
//! training finds no usable interaction, 1 when an output cannot be written.

mod config;
mod detect;
mod synth;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "afford", version, about = "One-shot geometric affordance detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a descriptor from one posed query/scene example.
    Train(train::TrainArgs),
    /// Detect one descriptor in a scene.
    Detect(detect::DetectArgs),
    /// Detect every descriptor of a directory in one scene.
    Batch(detect::BatchArgs),
    /// Write a synthetic scene or training pair.
    Synth(synth::SynthArgs),
    /// Dump the sampled bisector surface as a PLY colored by distance to the query.
    Ibs(synth::IbsArgs),
}

/// Detection flags shared by `detect` and `batch`.
#[derive(Args, Debug, Clone, Default)]
pub struct DetectionFlags {
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Number of scene points to test.
    #[arg(long)]
    pub points: Option<usize>,
    /// Number of yaw steps about +Z.
    #[arg(long)]
    pub orientations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a colorized PLY with the query instanced at each detection.
    #[arg(long)]
    pub viz: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Degenerate(anyhow::Error),
    Output(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Output(_) => 1,
            Failure::Input(_) => 2,
            Failure::Degenerate(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Input(e) | Failure::Degenerate(e) | Failure::Output(e) => e,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let degenerate = e.chain().any(|c| {
            matches!(
                c.downcast_ref::<afford::Error>(),
                Some(afford::Error::DegenerateInteraction(_))
            )
        });
        if degenerate {
            Failure::Degenerate(e)
        } else {
            Failure::Input(e)
        }
    }
}

impl From<afford::Error> for Failure {
    fn from(e: afford::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

pub type CmdResult = std::result::Result<(), Failure>;

/// Marks errors from writing results, as opposed to reading inputs.
pub trait OutputContext<T> {
    fn output(self, path: &std::path::Path) -> std::result::Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> OutputContext<T> for std::result::Result<T, E> {
    fn output(self, path: &std::path::Path) -> std::result::Result<T, Failure> {
        self.map_err(|e| Failure::Output(e.into().context(format!("cannot write {}", path.display()))))
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("AFFORD_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("AFFORD_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("cannot configure the worker pool")?;
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    configure_threads()?;
    match cli.command {
        Command::Train(a) => train::run(a),
        Command::Detect(a) => detect::run_detect(a),
        Command::Batch(a) => detect::run_batch(a),
        Command::Synth(a) => synth::run_synth(a),
        Command::Ibs(a) => synth::run_ibs(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
