//! `mvrbm`: train, apply and inspect matrix-variate RBMs from the shell.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numerical divergence.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "mvrbm", version, about = "Matrix-variate restricted Boltzmann machines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Train an MVRBM (or the classic RBM baseline) on MNIST, or a
    /// multimodal super-resolution model on an image corpus.
    Train(TrainArgs),
    /// Corrupt images with salt-and-pepper noise and reconstruct them.
    Denoise(DenoiseArgs),
    /// 1-NN classification of MNIST on hidden features.
    Classify(ClassifyArgs),
    /// Super-resolve an image with a multimodal model.
    Superres(SuperresArgs),
    /// Render the learned dictionary as an image grid.
    Filters(FiltersArgs),
    /// RMSE and PSNR between two images.
    Eval(EvalArgs),
}

#[derive(Args, Default)]
struct Common {
    /// key = value file; flags take precedence over its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory receiving every output file (created if missing).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Default)]
struct TrainFlags {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    cd_steps: Option<usize>,
    /// Use visible probabilities instead of samples in the negative phase.
    #[arg(long)]
    mean_field_negative: bool,
}

#[derive(Args, Default)]
struct MnistFlags {
    /// Directory with the four MNIST IDX files.
    #[arg(long)]
    mnist: Option<PathBuf>,
    /// Binarisation threshold; `none` keeps raw intensities.
    #[arg(long)]
    threshold: Option<String>,
    /// Restrict to one digit class.
    #[arg(long)]
    digit: Option<u8>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    train: TrainFlags,
    #[command(flatten)]
    mnist: MnistFlags,
    /// mvrbm or mmvrbm.
    #[arg(long)]
    kind: Option<String>,
    /// Train the classic vector RBM with K·L hidden units instead.
    #[arg(long)]
    baseline: Option<String>,
    /// Number of training images.
    #[arg(long)]
    n: Option<usize>,
    /// Hidden matrix size, e.g. 15x15.
    #[arg(long)]
    hidden: Option<String>,
    /// Manifest of high-resolution training images (mmvrbm).
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    patch: Option<usize>,
    #[arg(long)]
    patches: Option<usize>,
    #[arg(long)]
    factor: Option<usize>,
    /// raw or residual.
    #[arg(long)]
    encoding: Option<String>,
    #[arg(long)]
    spread: Option<f64>,
}

#[derive(Args)]
struct DenoiseArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    mnist: MnistFlags,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Manifest of grayscale images to use instead of the MNIST test split.
    #[arg(long)]
    images: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Fraction of pixels hit by noise.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sample the hidden layer instead of using its mean.
    #[arg(long)]
    sample_hidden: bool,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    mnist: MnistFlags,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Number of training images used as the 1-NN reference set.
    #[arg(long)]
    train_n: Option<usize>,
    /// Number of test images.
    #[arg(long)]
    test_n: Option<usize>,
    /// Also report raw-pixel 1-NN on the same subsets.
    #[arg(long)]
    raw_baseline: bool,
}

#[derive(Args)]
struct SuperresArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    model: Option<PathBuf>,
    /// High-resolution ground truth: downscaled, reconstructed and scored.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Low-resolution image to magnify (no metrics).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    cycles: Option<usize>,
    /// Patch grid spacing; defaults to half the patch size.
    #[arg(long)]
    stride: Option<usize>,
}

#[derive(Args)]
struct FiltersArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Denoise(a) => commands::denoise(a),
        Command::Classify(a) => commands::classify(a),
        Command::Superres(a) => commands::superres(a),
        Command::Filters(a) => commands::filters(a),
        Command::Eval(a) => commands::eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mvrbm: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
