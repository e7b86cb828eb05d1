//! `ganprior`: reproducible pipelines for Gaussian latent priors.
//!
//! Every command writes its outputs plus a `manifest.json` into `--out-dir`.
//! The manifest holds the fully resolved configuration and can be replayed
//! with `ganprior replay`; wall-clock time goes to a separate `timing.json`.
//!
//! Exit codes: 0 success, 2 bad arguments, 3 malformed input, 4 numerical
//! failure.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Format(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Format(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "invalid arguments: {m}"),
            CliError::Format(m) => write!(f, "malformed input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<ganprior::Error> for CliError {
    fn from(e: ganprior::Error) -> Self {
        use ganprior::Error as E;
        match e {
            E::DimensionMismatch { .. } | E::InvalidArgument(_) => CliError::Usage(e.to_string()),
            E::Format(_) | E::Json(_) => CliError::Format(e.to_string()),
            E::NonFinite(_) | E::Diverged { .. } => CliError::Numerical(e.to_string()),
            E::Io(_) => CliError::Io(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "ganprior", version, about = "Gaussian latent priors for style-based generators")]
struct Cli {
    /// Worker threads (defaults to all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Directory receiving outputs and the manifest.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// JSON file supplying any subset of the configuration; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Create a seeded toy generator.
    InitGan {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: InitGanFlags,
    },
    /// Fit the Gaussian prior in V to generator samples.
    FitPrior {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: FitPriorFlags,
    },
    /// Sample styles and their images.
    Sample {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: SampleFlags,
    },
    /// Render images from a latent file.
    Render {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: RenderFlags,
    },
    /// Invert an image into W or W⁺.
    Invert {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: InvertFlags,
    },
    /// Apply truncation or compression to a batch of styles.
    Correct {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: CorrectFlags,
    },
    /// Run an experiment protocol.
    #[command(subcommand)]
    Experiment(Experiment),
    /// Re-run a command from its manifest.
    Replay {
        /// Manifest written by an earlier run.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum Experiment {
    /// Interpolation error curves with and without the prior.
    Interpolation {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: InterpolationFlags,
    },
    /// Match truncation and compression by Fréchet distance and compare them.
    FidTradeoff {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: FidTradeoffFlags,
    },
    /// Principal-component magnitudes of flagged and unflagged styles.
    PcProfile {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: PcProfileFlags,
    },
    /// Image and latent reconstruction errors for generated and
    /// out-of-model targets.
    Reconstruction {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: ReconstructionFlags,
    },
    /// Interpolation experiment over a grid of prior weights.
    LambdaSweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: LambdaSweepFlags,
    },
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct InitGanFlags {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long)]
    hidden_width: Option<usize>,
    #[arg(long)]
    mapping_layers: Option<usize>,
    #[arg(long)]
    scales: Option<usize>,
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long)]
    base_resolution: Option<usize>,
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct FitPriorFlags {
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct SampleFlags {
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct RenderFlags {
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long)]
    latents: Option<PathBuf>,
    /// Treat the file as a single W⁺ stack.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    stack: bool,
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct OptimizerFlags {
    /// Prior weight λ.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
    #[arg(long)]
    noise_factor: Option<f64>,
    #[arg(long)]
    ramp_fraction: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    adam_epsilon: Option<f64>,
    /// pixel-mse or feature-proxy.
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    proxy_seed: Option<u64>,
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct InvertFlags {
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Image batch file holding the target.
    #[arg(long)]
    target: Option<PathBuf>,
    /// Which image of the batch to invert.
    #[arg(long)]
    index: Option<usize>,
    /// w or wplus.
    #[arg(long)]
    space: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    optimizer: OptimizerFlags,
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct CorrectFlags {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    latents: Option<PathBuf>,
    /// truncation or compression.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    psi: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct InterpolationFlags {
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    pairs: Option<usize>,
    /// Comma-separated list of w, wplus.
    #[arg(long, value_delimiter = ',')]
    spaces: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Start inversions at the ground-truth latents.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    oracle: bool,
    #[command(flatten)]
    #[serde(flatten)]
    optimizer: OptimizerFlags,
    /// Alias for --iterations.
    #[arg(long)]
    #[serde(rename = "iterations", skip_serializing_if = "Option::is_none")]
    iters: Option<usize>,
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct ReconstructionFlags {
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Targets per source.
    #[arg(long)]
    targets: Option<usize>,
    /// Comma-separated list of w, wplus.
    #[arg(long, value_delimiter = ',')]
    spaces: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Seed of the second generator producing out-of-model targets.
    #[arg(long)]
    out_of_model_seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    optimizer: OptimizerFlags,
    /// Alias for --iterations.
    #[arg(long)]
    #[serde(rename = "iterations", skip_serializing_if = "Option::is_none")]
    iters: Option<usize>,
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct LambdaSweepFlags {
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    pairs: Option<usize>,
    /// w or wplus.
    #[arg(long)]
    space: Option<String>,
    /// Comma-separated prior weights.
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    optimizer: OptimizerFlags,
    /// Alias for --iterations.
    #[arg(long)]
    #[serde(rename = "iterations", skip_serializing_if = "Option::is_none")]
    iters: Option<usize>,
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct FidTradeoffFlags {
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Comma-separated compression factors.
    #[arg(long, value_delimiter = ',')]
    taus: Option<Vec<f64>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct PcProfileFlags {
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    latents: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    components: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    use commands as c;
    use config::resolve;
    match cli.command {
        Command::InitGan { common, flags } => {
            c::init_gan(&resolve(&flags, common.config.as_deref())?, &common.out_dir)
        }
        Command::FitPrior { common, flags } => {
            c::fit_prior(&resolve(&flags, common.config.as_deref())?, &common.out_dir)
        }
        Command::Sample { common, flags } => {
            c::sample(&resolve(&flags, common.config.as_deref())?, &common.out_dir)
        }
        Command::Render { common, flags } => {
            c::render(&resolve(&flags, common.config.as_deref())?, &common.out_dir)
        }
        Command::Invert { common, flags } => {
            c::invert(resolve(&flags, common.config.as_deref())?, &common.out_dir)
        }
        Command::Correct { common, flags } => {
            c::correct(&resolve(&flags, common.config.as_deref())?, &common.out_dir)
        }
        Command::Experiment(Experiment::Interpolation { common, flags }) => {
            c::interpolation(resolve(&flags, common.config.as_deref())?, &common.out_dir)
        }
        Command::Experiment(Experiment::Reconstruction { common, flags }) => {
            c::reconstruction(resolve(&flags, common.config.as_deref())?, &common.out_dir)
        }
        Command::Experiment(Experiment::LambdaSweep { common, flags }) => {
            c::lambda_sweep(resolve(&flags, common.config.as_deref())?, &common.out_dir)
        }
        Command::Experiment(Experiment::FidTradeoff { common, flags }) => {
            c::fid_tradeoff(&resolve(&flags, common.config.as_deref())?, &common.out_dir)
        }
        Command::Experiment(Experiment::PcProfile { common, flags }) => {
            c::pc_profile(&resolve(&flags, common.config.as_deref())?, &common.out_dir)
        }
        Command::Replay { manifest, out_dir } => c::replay(&manifest, &out_dir),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
