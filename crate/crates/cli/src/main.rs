mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "ppp",
    version,
    about = "Pre-retrieval prediction of personalization performance"
)]
struct Cli {
    /// TOML file with default option values; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index from a JSON-lines corpus.
    Index(IndexArgs),
    /// Compute the 37 predictors for every (query, profile) pair.
    Predict(PredictArgs),
    /// Run original and personalized retrieval and score both with NDCG.
    Evaluate(EvaluateArgs),
    /// Correlate predictors with diffPerso per profile.
    Correlate(CorrelateArgs),
    /// Train and cross-validate per-profile personalization models.
    Decide(DecideArgs),
    /// Generate a seeded synthetic corpus, queries and profiles.
    Synth(SynthArgs),
}

#[derive(Args)]
pub struct IndexArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Stopword file, one term per line (default: bundled English list).
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// porter or none
    #[arg(long)]
    stemmer: Option<String>,
    /// Index artifact to write.
    #[arg(long)]
    index: Option<PathBuf>,
}

#[derive(Args)]
pub struct PairArgs {
    #[arg(long)]
    index: Option<PathBuf>,
    /// Tab-separated `query_id<TAB>text`.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Tab-separated `profile_id<TAB>term:weight,...`.
    #[arg(long)]
    profiles: Option<PathBuf>,
    /// `query_id profile_id doc_id grade` lines (user-study mode).
    #[arg(long)]
    assessments: Option<PathBuf>,
    /// user-study, aspire or synthetic
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pairs: PairArgs,
    /// Weight of maxSCQ in joint and joint2.
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of profile terms added to the query.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pairs: PairArgs,
    /// Weight of the profile similarity in the re-ranker.
    #[arg(long)]
    beta: Option<f64>,
    /// Number of leading documents re-ranked.
    #[arg(long)]
    rerank_depth: Option<usize>,
    /// Ranking depth considered by automatic assessment.
    #[arg(long)]
    threshold: Option<usize>,
    /// NDCG cutoff.
    #[arg(long)]
    cutoff: Option<usize>,
}

#[derive(Args)]
pub struct CorrelateArgs {
    #[arg(long)]
    predictors: Option<PathBuf>,
    #[arg(long)]
    triplets: Option<PathBuf>,
    /// pearson, spearman or kendall
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
pub struct DecideArgs {
    #[arg(long)]
    predictors: Option<PathBuf>,
    #[arg(long)]
    triplets: Option<PathBuf>,
    /// Correlation summary used to pick the top-n predictors.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// classification, regression or both
    #[arg(long)]
    kind: Option<String>,
    /// Folds for k-fold cross validation; 0 selects leave-one-out.
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    top_n: Option<usize>,
    /// Oversample the minority label when training classifiers.
    #[arg(long)]
    resample: bool,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    categories: Option<usize>,
    #[arg(long)]
    docs_per_category: Option<usize>,
    #[arg(long)]
    queries_per_category: Option<usize>,
    #[arg(long)]
    noise_ratio: Option<f64>,
    /// Fraction of profile terms borrowed from a neighbouring category.
    #[arg(long)]
    profile_noise: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = config::FileConfig::load(cli.config.as_deref()).and_then(|file| match cli.command {
        Command::Index(a) => commands::index(a, &file),
        Command::Predict(a) => commands::predict(a, &file),
        Command::Evaluate(a) => commands::evaluate(a, &file),
        Command::Correlate(a) => commands::correlate(a, &file),
        Command::Decide(a) => commands::decide(a, &file),
        Command::Synth(a) => commands::synth(a, &file),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
