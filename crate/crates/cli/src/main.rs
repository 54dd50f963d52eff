mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "tailbound", version, about = "Exact k-NN search with tail-energy pruning", args_override_self = true)]
pub struct Cli {
    /// File of `key = value` lines naming long options of the subcommand;
    /// options given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Generate a seeded synthetic dataset.
    Synth(SynthArgs),
    /// Learn an orthogonal transform and save it.
    Train(TrainArgs),
    /// Apply a saved transform to a vector file.
    Transform(TransformArgs),
    /// Build and save a flat, IVF or HNSW index.
    Build(BuildArgs),
    /// Run queries against a saved index.
    Search(SearchArgs),
    /// Compute exact ground truth by brute force.
    Gt(GtArgs),
    /// Sweep search parameters in both modes and emit CSV.
    Sweep(SweepArgs),
    /// Estimate the energy-compaction rate of a dataset.
    Alpha(AlphaArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Gaussian with exponentially decaying spectrum under a random rotation.
    Rotated,
    /// Isotropic Gaussian.
    White,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "rotated")]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    /// Spectrum decay: eigenvalue `j` is `e^{−decay·j/d}`.
    #[arg(long, default_value_t = 6.0)]
    pub decay: f64,
    /// Seed of the rotation; shared by every file drawn from one distribution.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seed of the samples themselves.
    #[arg(long, default_value_t = 1)]
    pub sample_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 8.0)]
    pub alpha_target: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f32,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 10)]
    pub patience: usize,
    #[arg(long, default_value_t = 0.3)]
    pub train_frac: f64,
    #[arg(long, default_value_t = 0.1)]
    pub val_frac: f64,
    /// Vectors per optimizer step.
    #[arg(long, default_value_t = 256)]
    pub minibatch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TransformArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum IndexKind {
    Flat,
    Ivf,
    Hnsw,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub index: IndexKind,
    /// Transform to embed; without one the identity is used.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Level count (equal widths) or comma-separated thresholds `0,…,d`.
    #[arg(long)]
    pub levels: Option<String>,
    /// Vectors per level-major storage batch.
    #[arg(long, default_value_t = 256)]
    pub batch: usize,
    #[arg(long, default_value_t = 100)]
    pub nlist: usize,
    /// HNSW links per node on upper layers.
    #[arg(long, default_value_t = 16)]
    pub m: usize,
    #[arg(long, default_value_t = 40)]
    pub efconstruction: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Baseline,
    Pruned,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Point,
    BatchNoub,
    BatchUb,
}

#[derive(Args, Debug, Clone)]
pub struct QueryArgs {
    #[arg(long)]
    pub queries: PathBuf,
    /// Ground-truth ids (`.ivecs`) aligned with the query file.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Sample this many queries (seeded) instead of using all of them.
    #[arg(long)]
    pub nq: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "batch-noub")]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[command(flatten)]
    pub query: QueryArgs,
    #[arg(long, value_enum, default_value = "pruned")]
    pub mode: Mode,
    #[arg(long, default_value_t = 1)]
    pub nprobe: usize,
    #[arg(long, default_value_t = 64)]
    pub efsearch: usize,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    /// Result ids as `.ivecs`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GtArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[command(flatten)]
    pub query: QueryArgs,
    /// Raw database, used for ground truth when `--gt` is absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Comma-separated n_probe (IVF) or ef_search (HNSW) values.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 1.2)]
    pub denoise: f64,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AlphaArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Transform applied before measuring; raw coefficients otherwise.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Comma-separated fractions `p` of the dimension.
    #[arg(long, default_value = "0.1,0.25,0.5")]
    pub p: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv = match config::expand(std::env::args_os().collect(), &Cli::command()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
