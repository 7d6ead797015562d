//! `roughspec` command-line tool.
//!
//! Exit codes: 0 on success, 2 when input or configuration is rejected, 3
//! when a numerical routine fails. `ROUGHSPEC_THREADS` caps the worker pool.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use roughspec::corpus::Weighting;
use roughspec::pipeline::Method;
use roughspec::Error;

#[derive(Parser)]
#[command(name = "roughspec", version, about = "Graph spectral clustering with boundary filtering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic block similarity matrix and its labels.
    Generate(GenerateArgs),
    /// Write the per-item top/bottom similarity profile.
    Profile(ProfileArgs),
    /// Remove boundary items below a threshold.
    Filter(FilterArgs),
    /// Embed, optionally filter, and run k-means.
    Cluster(ClusterArgs),
    /// Score a predicted partition against true labels.
    Evaluate(EvaluateArgs),
    /// Describe clusters by their top centroid terms.
    Explain(ExplainArgs),
    /// Run every method at every threshold on every dataset.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Dataset preset, 1 to 4.
    #[arg(long, conflicts_with = "params")]
    preset: Option<u8>,
    /// JSON file with generator parameters.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Override the sample size.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Append this many uniform-noise items.
    #[arg(long, requires = "noise_max")]
    noise_count: Option<usize>,
    /// Upper bound of the noise similarities.
    #[arg(long)]
    noise_max: Option<f64>,
    /// Output directory for `similarity.csv` and `labels.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long)]
    similarity: PathBuf,
    #[arg(long, default_value_t = roughspec::roughfilter::DEFAULT_FRACTION)]
    q: f64,
    /// Thresholds reported as removal flags.
    #[arg(long, value_delimiter = ',', default_values_t = roughspec::roughfilter::DEFAULT_THRESHOLDS)]
    thresholds: Vec<f64>,
    /// Order rows by increasing avg_diff instead of item order.
    #[arg(long)]
    sorted: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long)]
    similarity: PathBuf,
    #[arg(long)]
    threshold: f64,
    #[arg(long, default_value_t = roughspec::roughfilter::DEFAULT_FRACTION)]
    q: f64,
    /// Output directory for `core.csv` and `filter.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    Tf,
    Tfidf,
}

impl From<WeightingArg> for Weighting {
    fn from(w: WeightingArg) -> Self {
        match w {
            WeightingArg::Tf => Weighting::Tf,
            WeightingArg::Tfidf => Weighting::TfIdf,
        }
    }
}

#[derive(Args)]
struct ClusterArgs {
    /// JSON pipeline configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, group = "source")]
    similarity: Option<PathBuf>,
    /// Labels JSON for a similarity input.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, group = "source")]
    corpus: Option<PathBuf>,
    #[arg(long, group = "source")]
    preset: Option<u8>,
    #[arg(long, value_enum)]
    weighting: Option<WeightingArg>,
    /// Sample size for a preset.
    #[arg(long)]
    n: Option<usize>,
    /// Generator seed for a preset.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    unit_rows: bool,
    #[arg(long)]
    extra_dimension: bool,
    #[arg(long)]
    svd_rank: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    kmeans_seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// JSON with a `labels` array.
    #[arg(long)]
    truth: PathBuf,
    /// Partition JSON written by `cluster`.
    #[arg(long)]
    pred: PathBuf,
    /// Similarity CSV for the cut criteria.
    #[arg(long)]
    similarity: Option<PathBuf>,
    /// Write the score JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Markdown,
    Json,
}

#[derive(Args)]
struct ExplainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    partition: PathBuf,
    #[arg(long, default_value_t = roughspec::explain::DEFAULT_TOP_TERMS)]
    w: usize,
    #[arg(long, value_enum, default_value_t = WeightingArg::Tfidf)]
    weighting: WeightingArg,
    #[arg(long, value_enum, default_value_t = ReportFormat::Markdown)]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn configure_threads() -> roughspec::Result<()> {
    if let Ok(raw) = std::env::var("ROUGHSPEC_THREADS") {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidParameter(format!("ROUGHSPEC_THREADS must be a positive integer, got `{raw}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

fn run(cli: Cli) -> roughspec::Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Profile(a) => commands::profile(a),
        Command::Filter(a) => commands::filter(a),
        Command::Cluster(a) => commands::cluster(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Explain(a) => commands::explain(a),
        Command::Sweep(a) => commands::sweep(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
