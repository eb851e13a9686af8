//! Command-line front end over the reblurring and deblurring library.
//!
//! Exit codes: 0 success, 1 a requested check failed, 2 usage or I/O
//! error, 3 the solver aborted on non-finite numbers. Error paths write
//! only to standard error; reports and metrics go to standard output.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::exit;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use reblur_core::SyntheticPattern;

pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_USAGE_IO: u8 = 2;
pub const EXIT_NUMERIC_ABORT: u8 = 3;

/// Terminal failure of a command: an exit code plus a message for
/// standard error.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE_IO,
            message: message.into(),
        }
    }
}

impl From<reblur_core::Error> for Failure {
    fn from(e: reblur_core::Error) -> Self {
        let code = match &e {
            reblur_core::Error::NonFiniteGradient { .. } => EXIT_NUMERIC_ABORT,
            _ => EXIT_USAGE_IO,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "reblur",
    about = "Linear-motion reblurring, self-supervised deblurring, synthetic data, metrics, and gradient checks",
    version
)]
struct Cli {
    /// Caps internal parallelism (default: hardware parallelism).
    /// Falls back to the REBLUR_THREADS environment variable.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Logs per-iteration progress and wall-clock time to standard error.
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Renders the motion-blurred version of a sharp image along a flow.
    Reblur(ReblurArgs),
    /// Recovers two sharp images and their flows from a blurry pair.
    Deblur(DeblurArgs),
    /// Averages windows of a frame directory into a blur/sharp pair.
    Synth(SynthArgs),
    /// Generates a translating synthetic frame sequence.
    Gensequence(GensequenceArgs),
    /// Compares two images with PSNR and/or SSIM.
    Eval(EvalArgs),
    /// Verifies every analytic gradient against finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(clap::Args)]
pub struct ReblurArgs {
    /// Sharp input image (PNG).
    #[arg(long)]
    sharp: PathBuf,
    /// Flow field (.flo). Without --tau/--dt it is used directly as the
    /// per-virtual-frame step flow.
    #[arg(long)]
    flow: PathBuf,
    /// Virtual frames per side of the latent instant (2n+1 total).
    #[arg(long)]
    n: usize,
    /// Exposure time; interprets --flow as inter-frame motion and scales
    /// it by tau / (2 n dt) first.
    #[arg(long, requires = "dt")]
    tau: Option<f64>,
    /// Time between frames, paired with --tau.
    #[arg(long, requires = "tau")]
    dt: Option<f64>,
    /// Output blurred image (PNG).
    #[arg(long)]
    out: PathBuf,
    /// Optional output for the trajectory-coverage mask (PNG).
    #[arg(long)]
    mask_out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct DeblurArgs {
    /// First blurry observation (PNG).
    #[arg(long)]
    blur_a: PathBuf,
    /// Second blurry observation (PNG).
    #[arg(long)]
    blur_b: PathBuf,
    /// Directory receiving I_a.png, I_b.png, flow_ab.flo, flow_ba.flo,
    /// and report.json.
    #[arg(long)]
    out_dir: PathBuf,
    /// Gradient iterations per pyramid level.
    #[arg(long)]
    iters: Option<usize>,
    /// Weight of the forward-backward consistency term.
    #[arg(long)]
    lambda: Option<f64>,
    /// Virtual frames per side in the blur model.
    #[arg(long)]
    n: Option<usize>,
    /// Coarse-to-fine pyramid levels.
    #[arg(long)]
    levels: Option<usize>,
    /// Recorded in the report; the descent itself is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Smoothness weight on the estimated flows.
    #[arg(long)]
    tv_flow: Option<f64>,
}

#[derive(clap::Args)]
pub struct SynthArgs {
    /// Directory of zero-padded, lexicographically ordered PNG frames.
    #[arg(long)]
    frames: PathBuf,
    /// Frames averaged per observation (odd).
    #[arg(long)]
    window: usize,
    /// Frame offset between the two observations.
    #[arg(long)]
    stride: usize,
    /// Directory receiving blur/sharp PNGs and manifest.json.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(clap::Args)]
pub struct GensequenceArgs {
    /// Texture drawn on the translating canvas.
    #[arg(long)]
    pattern: PatternArg,
    /// Motion in pixels per frame, as VX,VY.
    #[arg(long)]
    velocity: Velocity,
    /// Number of frames.
    #[arg(long)]
    count: usize,
    /// Frame size as WxH.
    #[arg(long)]
    size: SizeArg,
    /// Seed for the noise pattern.
    #[arg(long)]
    seed: u64,
    /// Directory receiving the frames and manifest.json.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(clap::Args)]
pub struct EvalArgs {
    /// Reference image (PNG).
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Image under test (PNG).
    #[arg(long)]
    test: PathBuf,
    /// Which metrics to print.
    #[arg(long, default_value = "both")]
    metric: MetricArg,
}

#[derive(clap::Args)]
pub struct GradcheckArgs {
    /// Base seed; trial t uses seed + t.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random instances per suite.
    #[arg(long, default_value_t = 100)]
    trials: usize,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum PatternArg {
    Checkerboard,
    Noise,
    Ramp,
}

impl PatternArg {
    pub fn to_pattern(self) -> SyntheticPattern {
        match self {
            PatternArg::Checkerboard => SyntheticPattern::Checkerboard,
            PatternArg::Noise => SyntheticPattern::Noise,
            PatternArg::Ramp => SyntheticPattern::Ramp,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PatternArg::Checkerboard => "checkerboard",
            PatternArg::Noise => "noise",
            PatternArg::Ramp => "ramp",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum MetricArg {
    Psnr,
    Ssim,
    Both,
}

/// `VX,VY` pair in pixels per frame.
#[derive(Clone, Copy)]
pub struct Velocity(pub f64, pub f64);

impl FromStr for Velocity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (vx, vy) = s
            .split_once(',')
            .ok_or_else(|| format!("expected VX,VY, got '{s}'"))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad velocity component '{t}': {e}"))
        };
        Ok(Velocity(parse(vx)?, parse(vy)?))
    }
}

/// `WxH` pixel dimensions.
#[derive(Clone, Copy)]
pub struct SizeArg {
    pub width: usize,
    pub height: usize,
}

impl FromStr for SizeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected WxH, got '{s}'"))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad dimension '{t}': {e}"))
        };
        Ok(SizeArg {
            width: parse(w)?,
            height: parse(h)?,
        })
    }
}

fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("REBLUR_THREADS") {
        Ok(v) => v
            .parse::<usize>()
            .map(Some)
            .map_err(|e| Failure::usage(format!("bad REBLUR_THREADS value '{v}': {e}"))),
        Err(_) => Ok(None),
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    };
    exit(code as i32);
}

fn run(cli: Cli) -> Result<u8, Failure> {
    reblur_core::configure_threads(resolve_threads(cli.threads)?);
    let verbose = cli.verbose;
    match cli.command {
        Command::Reblur(args) => commands::run_reblur(&args),
        Command::Deblur(args) => commands::run_deblur(&args, verbose),
        Command::Synth(args) => commands::run_synth(&args),
        Command::Gensequence(args) => commands::run_gensequence(&args),
        Command::Eval(args) => commands::run_eval(&args),
        Command::Gradcheck(args) => commands::run_gradcheck(&args),
    }
}
