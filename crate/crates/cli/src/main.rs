//! `screenkit` command-line tool.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "screenkit", version, about = "Citation abstract screening toolkit")]
pub struct Cli {
    /// Worker threads for parallel tasks.
    #[arg(long, global = true, env = "SCREENKIT_WORKERS")]
    pub workers: Option<usize>,
    /// TOML file with svm, embedding, ensemble, active and stats sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus and rewrite it as JSONL.
    Ingest(IngestArgs),
    /// Train skip-gram word embeddings.
    Embed(EmbedArgs),
    /// Write the feature matrix of a corpus.
    Featurize(FeaturizeArgs),
    /// Train one model on the labeled citations of a corpus.
    Train(TrainArgs),
    /// Score a corpus with a saved model.
    Score(ScoreArgs),
    /// Star-rate the unlabeled citations of a corpus.
    Rate(RateArgs),
    /// Cross-validate methods over corpora.
    Evaluate(EvaluateArgs),
    /// Group methods that cannot be told apart from the best one.
    Rankgroups(RankgroupsArgs),
    /// Simulate certainty-sampling active learning.
    SimulateAl(SimulateAlArgs),
    /// Turn result files into tables and plots.
    Report(ReportArgs),
    /// Re-run a command from its manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CorpusArgs {
    /// Corpus files (JSONL or CSV), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub corpus: Vec<PathBuf>,
    /// Every *.jsonl and *.csv file in this directory.
    #[arg(long)]
    pub corpus_dir: Option<PathBuf>,
    /// Field holding the label.
    #[arg(long, visible_alias = "labeled-field", default_value = "label")]
    pub label_field: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EmbeddingArgs {
    /// Embedding table (TSV); trained on the input corpora when absent.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Embedding dimension when training.
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IngestArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FeaturizeArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub embedding: EmbeddingArgs,
    /// uni-bi, w2v-row or w2v-col.
    #[arg(long, default_value = "uni-bi")]
    pub kind: String,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Catalog method id; overrides --loss, --bias and --feature.
    #[arg(long)]
    pub method: Option<u32>,
    /// hinge, cost-hinge, transductive, auc, kld or quadmean.
    #[arg(long)]
    pub loss: Option<String>,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub bias: bool,
    #[arg(long, default_value = "uni-bi")]
    pub feature: String,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub j: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub embedding: EmbeddingArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Model file; a uni-bi vocabulary is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value = "uni-bi")]
    pub feature: String,
    /// Vocabulary for uni-bi features; defaults to the one saved with the model.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub embedding: EmbeddingArgs,
    /// Citations to rate; by default the unlabeled citations of --corpus.
    #[arg(long)]
    pub unlabeled: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub embedding: EmbeddingArgs,
    /// Method ids, comma separated, or "all".
    #[arg(long, default_value = "all")]
    pub methods: String,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RankgroupsArgs {
    #[arg(long)]
    pub grid: PathBuf,
    /// Dataset table written by evaluate; defaults to datasets.csv next to the grid.
    #[arg(long)]
    pub datasets: Option<PathBuf>,
    /// Metric names, comma separated, or "all".
    #[arg(long, default_value = "auc")]
    pub metric: String,
    /// Prevalence groups (low, mid, high, all), comma separated.
    #[arg(long, default_value = "low,mid,high")]
    pub group: String,
    /// Method ids to compare; all methods in the grid by default.
    #[arg(long)]
    pub methods: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Put every method in one group when the ANOVA shows no method effect.
    #[arg(long)]
    pub gate: bool,
    /// Rank-group CSV; the ANOVA table goes next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateAlArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub embedding: EmbeddingArgs,
    #[arg(long, default_value = "w2v-row")]
    pub feature: String,
    #[arg(long, default_value = "auc")]
    pub loss: String,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub bias: bool,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    /// metric-table, rank-groups, al-histogram or inclusion-curve.
    #[arg(long)]
    pub kind: String,
    /// grid.csv, aggregate.csv or a trace CSV, depending on the kind.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub datasets: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Run plotted by inclusion-curve.
    #[arg(long, default_value_t = 0)]
    pub run: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded location.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse_from(std::iter::once("screenkit".to_string()).chain(args.iter().cloned())) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(anyhow::Error::from)
            .and_then(|pool| pool.install(|| commands::execute(&cli, &args))),
        None => commands::execute(&cli, &args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<commands::UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
