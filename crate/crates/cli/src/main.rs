//! `ictal`: an EEG seizure-prediction pipeline in five commands.
//!
//! ```text
//! ictal synth    --out data/ --preictal 100 --interictal 100 --seed 7
//! ictal extract  --manifest data/manifest.tsv --out features/
//! ictal train    --manifest data/manifest.tsv --out run/ --seed 7
//! ictal evaluate --checkpoint run/checkpoint.blsm --manifest run/test_manifest.tsv --out eval/
//! ictal roc      --scores eval/scores.csv --out eval/
//! ```
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage errors.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "ictal",
    version,
    about = "EEG seizure prediction: synthetic data, spectral features, a bidirectional LSTM, and ROC/AUC evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deterministic synthetic dataset (clips + manifest)
    Synth(SynthArgs),
    /// Extract windowed feature sequences from a manifest into a CSV cache
    Extract(ExtractArgs),
    /// Split, extract, and train; writes a checkpoint and an epoch log
    Train(TrainArgs),
    /// Score a test set with a checkpoint; prints AUC and writes ROC outputs
    Evaluate(EvaluateArgs),
    /// Recompute the ROC curve and AUC from a scores CSV
    Roc(RocArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// `key = value` config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed for every random choice of the run
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of preictal clips
    #[arg(long)]
    preictal: Option<usize>,
    /// Number of interictal clips
    #[arg(long)]
    interictal: Option<usize>,
    #[arg(long)]
    channels: Option<usize>,
    /// Clip duration in seconds
    #[arg(long)]
    duration_s: Option<f64>,
    #[arg(long)]
    sampling_rate_hz: Option<f64>,
    /// Standard deviation of the noise floor
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Amplitude of the preictal signature sinusoids
    #[arg(long)]
    amplitude: Option<f64>,
    /// Signature band as LO-HI in Hz (e.g. 4-8)
    #[arg(long)]
    band: Option<String>,
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Manifest of labeled clips
    #[arg(long)]
    manifest: PathBuf,
    /// Window length in seconds
    #[arg(long)]
    window_seconds: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Manifest of labeled clips (split, extract, train)
    #[arg(long, conflicts_with = "features", required_unless_present = "features")]
    manifest: Option<PathBuf>,
    /// Feature cache CSV from `extract` (split and train without raw clips)
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    hidden_size: Option<usize>,
    #[arg(long)]
    window_seconds: Option<f64>,
    /// Fraction of clips in the training split, in (0, 1)
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Skip feature z-scoring
    #[arg(long)]
    no_normalize: bool,
    /// Weight the loss by inverse class frequency
    #[arg(long)]
    class_weighting: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Checkpoint written by `train`
    #[arg(long)]
    checkpoint: PathBuf,
    /// Manifest of labeled clips to score
    #[arg(long, conflicts_with = "features", required_unless_present = "features")]
    manifest: Option<PathBuf>,
    /// Feature cache CSV to score
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    window_seconds: Option<f64>,
}

#[derive(Args)]
struct RocArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Scores CSV (`clip_id,label,score`) written by `evaluate`
    #[arg(long)]
    scores: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(args) => commands::cmd_synth(args),
        Command::Extract(args) => commands::cmd_extract(args),
        Command::Train(args) => commands::cmd_train(args),
        Command::Evaluate(args) => commands::cmd_evaluate(args),
        Command::Roc(args) => commands::cmd_roc(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
