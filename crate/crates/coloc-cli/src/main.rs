use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod baseline_cmd;
mod eval;
mod run;
mod synth_cmd;

#[derive(Parser)]
#[command(
    name = "coloc",
    version,
    about = "Object co-localization from saliency and co-saliency maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Co-localize every image of a dataset and write predictions,
    /// traces, a report, and optionally overlays.
    Run(RunArgs),
    /// Recompute CorLoc from stored predictions without re-running the
    /// solver.
    Eval(EvalArgs),
    /// Fill a dataset's saliency/ and cosaliency/ directories with
    /// classical baseline maps.
    Baseline(BaselineArgs),
    /// Generate a seeded synthetic dataset in the standard layout.
    Synth(SynthArgs),
}

#[derive(Args)]
struct SolverFlags {
    /// Squared-step convergence tolerance.
    #[arg(long, default_value_t = 2.0)]
    epsilon: f64,
    /// Forced-break iteration cap.
    #[arg(long, default_value_t = 30)]
    max_iters: usize,
    /// Normalized Sobel magnitude cutoff for edge profiles.
    #[arg(long, default_value_t = 0.1)]
    edge_threshold: f64,
    /// Lower clamp for deviation ratios; defaults to half a pixel of
    /// normalized deviation per image.
    #[arg(long)]
    clamp_delta: Option<f64>,
}

impl SolverFlags {
    fn to_config(&self) -> coloc::SolverConfig {
        coloc::SolverConfig {
            epsilon: self.epsilon,
            max_iters: self.max_iters,
            clamp_delta: self.clamp_delta,
            edge_threshold: self.edge_threshold,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Dataset root directory.
    #[arg(long)]
    root: PathBuf,
    /// Output directory for predictions, traces, report and overlays.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
    /// IoU threshold for CorLoc.
    #[arg(long, default_value_t = 0.5)]
    iou_threshold: f64,
    /// Worker threads; 0 uses every core. Results are identical either
    /// way.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Render ground-truth/prediction overlays for labeled cases.
    #[arg(long)]
    render: bool,
    /// Report format.
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory of per-class prediction CSVs (as written by `run`).
    #[arg(long)]
    predictions: PathBuf,
    /// Dataset root holding the ground truth.
    #[arg(long)]
    root: PathBuf,
    /// Output directory for the recomputed report.
    #[arg(long)]
    out: PathBuf,
    /// IoU threshold for CorLoc.
    #[arg(long, default_value_t = 0.5)]
    iou_threshold: f64,
    /// Report format.
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Args)]
struct BaselineArgs {
    /// Dataset root; images/ must exist per class.
    #[arg(long)]
    root: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Dataset root to create.
    #[arg(long)]
    out: PathBuf,
    /// Number of classes.
    #[arg(long, default_value_t = 3)]
    classes: u32,
    /// Images per class.
    #[arg(long, default_value_t = 20)]
    per_class: u32,
    /// Square image size in pixels (at least 32).
    #[arg(long, default_value_t = 128)]
    size: u32,
    /// Seed for all randomness.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run::execute(&args),
        Command::Eval(args) => eval::execute(&args),
        Command::Baseline(args) => baseline_cmd::execute(&args),
        Command::Synth(args) => synth_cmd::execute(&args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
