//! `boot3d`: batch frontend for the bootstrap face-reconstruction pipeline.
//!
//! Every subcommand reads an optional TOML config (`--config`), applies flag
//! overrides, writes its outputs plus a `run_manifest.csv` (config hash,
//! seed, output digests) and keeps wall-clock times in a separate `run.log`.
//! Failures print one line, `error: <code>: <message>`, and exit non-zero.

mod commands;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use boot3d::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "boot3d", version, about = "Self-supervised bootstrap pipeline for single-image 3D face reconstruction")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Pipeline config file (TOML); missing keys take defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0: one per core). Outputs do not depend on it.
    #[arg(long, global = true, env = "BOOT3D_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Marching cubes on a VXG1 grid.
    ExtractMesh {
        grid: PathBuf,
        #[arg(long)]
        iso: Option<f64>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Face frame (symmetry, vertical and gaze axes) of a mesh.
    EstimatePose {
        mesh: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Renders a mesh textured from its source image at every scheduled view.
    RenderSweep {
        mesh: PathBuf,
        image: PathBuf,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Bootstrap training pairs from frontal images.
    GenPairs {
        /// `oracle` (images paired with same-stem OBJ meshes) or `toy:<model.toy>`.
        #[arg(long)]
        recon: String,
        #[arg(long)]
        images: PathBuf,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Full desk-scale experiment: bias-train the toy model, bootstrap,
    /// fine-tune, evaluate before and after.
    BootstrapRun {
        #[arg(short, long)]
        output: PathBuf,
    },
    /// NME of predicted meshes against ground truth, paired by file stem.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Rigidly align predictions first.
        #[arg(long, conflicts_with = "no_icp")]
        icp: bool,
        #[arg(long)]
        no_icp: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Reconstruct, rotate, re-render, reconstruct again and compare.
    SelfRecon {
        #[arg(long)]
        recon: String,
        #[arg(long)]
        images: PathBuf,
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// Rigidly align before scoring.
        #[arg(long)]
        align: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Writes a synthetic face dataset (photos, volumes, meshes, manifest).
    SynthFaces {
        #[arg(long, default_value_t = 4)]
        count: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0")]
        yaws: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0")]
        pitches: Vec<f64>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// Comma-separated yaws in degrees, e.g. `-20,20`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub yaw_set: Option<Vec<f64>>,
    #[arg(long)]
    pub pitch_limit: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error: usage: {first}");
            return ExitCode::from(1);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run_cli(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {msg}", e.code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run_cli(cli: Cli) -> Result<(), Error> {
    let threads = cli.global.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| commands::dispatch(&cli.global, cli.command))
}
