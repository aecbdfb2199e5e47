use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Parser;
use rayon::prelude::*;
use serde_json::json;

use screenkit::active::{screened_histogram, simulate, ALConfig, ALStep, ALSummary, ALTrace};
use screenkit::corpus::{load_corpus_with_label_field, prevalence, write_jsonl, Corpus, CorpusFormat, PrevalenceGroup};
use screenkit::features::{
    build_unibigram_vocab, embed_corpus, normalize, train_skipgram, vectorize_corpus, EmbeddingTable, FeatureMatrix,
    Normalization, Vocabulary,
};
use screenkit::methods::{method, parse_method_ids, FeatureContext, FeatureKind, Method};
use screenkit::metrics::Metric;
use screenkit::relrank::{assign_stars, relrank};
use screenkit::report;
use screenkit::stats::{
    anova_two_factor, equivalence_groups, format_value, run_experiment_grid, write_evaluations_csv, Anova,
    ExperimentGrid, GridDataset, RankGroup, RankGroups, EVALUATION_CSV_HEADER, GRID_CSV_HEADER,
};
use screenkit::svm::{self, LinearModel, Loss, TrainConfig};

use crate::config::FileConfig;
use crate::manifest::{manifest_path, normalize_argv, replace_out, OutputFile, RunManifest, MANIFEST_FORMAT, MANIFEST_VERSION};
use crate::{Cli, Command};

/// Bad flag values; mapped to exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

pub const DATASETS_CSV_HEADER: [&str; 6] = ["dataset", "n", "relevant", "prevalence", "group", "uncovered"];
pub const SCORES_CSV_HEADER: [&str; 4] = ["id", "score", "predicted", "label"];
pub const FEATURES_CSV_HEADER: [&str; 4] = ["row", "id", "col", "value"];
pub const ANOVA_CSV_HEADER: [&str; 11] = [
    "metric",
    "group",
    "datasets",
    "dropped",
    "method_f",
    "method_p",
    "method_df",
    "data_f",
    "data_p",
    "data_df",
    "residual_df",
];
pub const RANK_DETAIL_CSV_HEADER: [&str; 7] = ["metric", "group", "rank_group", "method_id", "best", "mean", "p_value"];
pub const FRACTIONS_CSV_HEADER: [&str; 3] = ["review", "run", "fraction"];
pub const INCLUSION_CSV_HEADER: [&str; 2] = ["screened", "remaining"];

const DEFAULT_REPS: usize = 50;
const DEFAULT_FOLDS: usize = 2;
const DEFAULT_ALPHA: f64 = 0.05;
const DEFAULT_BINS: usize = 10;

/// What a command produced, for its manifest.
struct Outcome {
    out: PathBuf,
    is_dir: bool,
    outputs: Vec<OutputFile>,
    parameters: serde_json::Value,
}

fn output(path: &str, schema: &str, columns: &[&str]) -> OutputFile {
    OutputFile {
        path: path.to_string(),
        schema: format!("{schema}/v1"),
        columns: columns.iter().map(|c| c.to_string()).collect(),
    }
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn execute(cli: &Cli, raw_args: &[String]) -> anyhow::Result<()> {
    let file_cfg = FileConfig::load(cli.config.as_deref()).map_err(|e| usage(format!("{e:#}")))?;
    let outcome = match &cli.command {
        Command::Replay(a) => return replay(&a.manifest, a.out.as_deref()),
        Command::Ingest(a) => ingest(a)?,
        Command::Embed(a) => embed(a, &file_cfg, cli.seed)?,
        Command::Featurize(a) => featurize(a, &file_cfg, cli.seed)?,
        Command::Train(a) => train(a, &file_cfg, cli.seed)?,
        Command::Score(a) => score(a)?,
        Command::Rate(a) => rate(a, &file_cfg, cli.seed)?,
        Command::Evaluate(a) => evaluate(a, &file_cfg, cli.seed)?,
        Command::Rankgroups(a) => rankgroups(a, &file_cfg)?,
        Command::SimulateAl(a) => simulate_al(a, &file_cfg, cli.seed)?,
        Command::Report(a) => report_cmd(a, &file_cfg)?,
    };
    let command = raw_args
        .iter()
        .find(|a| !a.starts_with('-'))
        .cloned()
        .unwrap_or_default();
    let manifest = RunManifest {
        format: MANIFEST_FORMAT.into(),
        version: MANIFEST_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        command,
        argv: normalize_argv(raw_args),
        config_path: cli
            .config
            .as_ref()
            .map(|p| std::path::absolute(p).unwrap_or_else(|_| p.clone()).display().to_string()),
        parameters: json!({ "command": outcome.parameters, "config": file_cfg }),
        seed: cli.seed,
        output: std::path::absolute(&outcome.out)
            .unwrap_or_else(|_| outcome.out.clone())
            .display()
            .to_string(),
        outputs: outcome.outputs,
    };
    manifest.save(&manifest_path(&outcome.out, outcome.is_dir))
}

fn replay(manifest: &Path, out: Option<&Path>) -> anyhow::Result<()> {
    let m = RunManifest::load(manifest).map_err(|e| usage(format!("{e:#}")))?;
    let args = match out {
        Some(o) => replace_out(&m.argv, &std::path::absolute(o).unwrap_or_else(|_| o.to_path_buf())),
        None => m.argv.clone(),
    };
    let cli = Cli::try_parse_from(std::iter::once("screenkit".to_string()).chain(args.iter().cloned()))
        .map_err(|e| usage(format!("manifest arguments: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(usage("a manifest cannot replay another manifest"));
    }
    log::info!("replaying {}", m.command);
    execute(&cli, &args)
}

fn corpus_paths(a: &crate::CorpusArgs) -> anyhow::Result<Vec<PathBuf>> {
    let mut paths = a.corpus.clone();
    if let Some(dir) = &a.corpus_dir {
        let mut found: Vec<PathBuf> = fs::read_dir(dir)
            .with_context(|| format!("cannot read corpus directory {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                matches!(
                    p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
                    Some("jsonl") | Some("csv")
                )
            })
            .collect();
        found.sort();
        paths.extend(found);
    }
    if paths.is_empty() {
        return Err(usage("no corpus given (use --corpus or --corpus-dir)"));
    }
    Ok(paths)
}

fn load_corpora(a: &crate::CorpusArgs) -> anyhow::Result<Vec<Corpus>> {
    let corpora: Vec<Corpus> = corpus_paths(a)?
        .iter()
        .map(|p| {
            load_corpus_with_label_field(p, CorpusFormat::from_path(p), &a.label_field)
                .with_context(|| format!("loading corpus {}", p.display()))
        })
        .collect::<anyhow::Result<_>>()?;
    let mut names: Vec<&str> = corpora.iter().map(Corpus::name).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        bail!("corpus names (file stems) must be distinct");
    }
    Ok(corpora)
}

fn load_one(a: &crate::CorpusArgs) -> anyhow::Result<Corpus> {
    let mut c = load_corpora(a)?;
    if c.len() != 1 {
        return Err(usage("this command takes exactly one corpus"));
    }
    Ok(c.remove(0))
}

fn parse_feature(s: &str) -> anyhow::Result<FeatureKind> {
    FeatureKind::parse(s).ok_or_else(|| usage(format!("unknown feature kind {s:?} (uni-bi, w2v-row, w2v-col)")))
}

fn parse_loss(s: &str) -> anyhow::Result<Loss> {
    Loss::parse(s).ok_or_else(|| usage(format!("unknown loss {s:?}")))
}

/// Loads `--embeddings` or trains a table on `corpora`.
fn embeddings(
    a: &crate::EmbeddingArgs,
    corpora: &[&Corpus],
    cfg: &FileConfig,
    seed: u64,
) -> anyhow::Result<EmbeddingTable> {
    match &a.embeddings {
        Some(p) => EmbeddingTable::load(p).with_context(|| format!("loading embeddings {}", p.display())),
        None => {
            let sg = cfg.skipgram(a.dim, seed);
            log::info!("training {}-dimensional embeddings", sg.dim);
            Ok(train_skipgram(corpora, &sg)?)
        }
    }
}

fn ingest(a: &crate::IngestArgs) -> anyhow::Result<Outcome> {
    let corpus = load_one(&a.corpus)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_jsonl(&corpus, &a.out)?;
    let mut summary = json!({
        "name": corpus.name(),
        "n": corpus.len(),
        "labeled": corpus.labeled_count(),
        "relevant": corpus.relevant_count(),
    });
    if corpus.is_fully_labeled() {
        let (p, g) = prevalence(&corpus)?;
        summary["prevalence"] = json!(p);
        summary["group"] = json!(g.as_str());
    }
    println!("{summary}");
    Ok(Outcome {
        out: a.out.clone(),
        is_dir: false,
        outputs: vec![output(&file_name(&a.out), "corpus-jsonl", &["id", "title", "abstract", "label"])],
        parameters: json!({ "args": a, "summary": summary }),
    })
}

fn embed(a: &crate::EmbedArgs, cfg: &FileConfig, seed: u64) -> anyhow::Result<Outcome> {
    let corpora = load_corpora(&a.corpus)?;
    let refs: Vec<&Corpus> = corpora.iter().collect();
    let sg = cfg.skipgram(a.dim, seed);
    let table = train_skipgram(&refs, &sg)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    table.save(&a.out)?;
    println!("{} words, dimension {}", table.len(), table.dim());
    Ok(Outcome {
        out: a.out.clone(),
        is_dir: false,
        outputs: vec![output(&file_name(&a.out), "embedding-tsv", &["word", "vector"])],
        parameters: json!({ "args": a, "skipgram": {
            "dim": sg.dim, "window": sg.window, "min_count": sg.min_count, "epochs": sg.epochs,
            "negative": sg.negative, "sample": sg.sample, "seed": sg.seed,
        }}),
    })
}

fn write_features(x: &FeatureMatrix, corpus: &Corpus, path: &Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(FEATURES_CSV_HEADER)?;
    for (i, c) in corpus.citations().iter().enumerate() {
        let entries: Vec<(usize, f64)> = match x {
            FeatureMatrix::Sparse(s) => s.rows()[i].iter().collect(),
            FeatureMatrix::Dense(d) => d.row(i).iter().copied().enumerate().filter(|e| e.1 != 0.0).collect(),
        };
        for (j, v) in entries {
            w.write_record([i.to_string(), c.id.clone(), j.to_string(), format!("{v}")])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn featurize(a: &crate::FeaturizeArgs, cfg: &FileConfig, seed: u64) -> anyhow::Result<Outcome> {
    let kind = parse_feature(&a.kind)?;
    let corpus = load_one(&a.corpus)?;
    create_dir(&a.out)?;
    let mut outputs = Vec::new();
    let x = match kind {
        FeatureKind::UniBi => {
            let vocab = build_unibigram_vocab(&corpus)?;
            vocab.save(&a.out.join("vocab.tsv"))?;
            outputs.push(output("vocab.tsv", "vocab-tsv", &["term", "index", "df"]));
            FeatureMatrix::Sparse(vectorize_corpus(&corpus, &vocab))
        }
        FeatureKind::W2vRow | FeatureKind::W2vCol => {
            let table = embeddings(&a.embedding, &[&corpus], cfg, seed)?;
            let (raw, uncovered) = embed_corpus(&corpus, &table);
            if uncovered > 0 {
                log::warn!("{uncovered} citations have no in-vocabulary token");
            }
            let mode = if kind == FeatureKind::W2vRow { Normalization::Row } else { Normalization::Col };
            FeatureMatrix::Dense(normalize(&raw, mode))
        }
    };
    write_features(&x, &corpus, &a.out.join("features.csv"))?;
    outputs.push(output("features.csv", "features", &FEATURES_CSV_HEADER));
    Ok(Outcome {
        out: a.out.clone(),
        is_dir: true,
        outputs,
        parameters: json!({ "args": a, "n": x.n(), "dim": x.dim() }),
    })
}

fn model_config(m: &crate::ModelArgs, cfg: &FileConfig) -> anyhow::Result<(FeatureKind, TrainConfig)> {
    let (feature, base) = match (m.method, &m.loss) {
        (Some(id), _) => {
            let found: Method = method(id).ok_or_else(|| usage(format!("unknown method id {id}")))?;
            (found.feature, found.config)
        }
        (None, Some(l)) => (parse_feature(&m.feature)?, TrainConfig::new(parse_loss(l)?, m.bias)),
        (None, None) => return Err(usage("give --method or --loss")),
    };
    let mut c = cfg.apply_svm(base);
    if let Some(v) = m.c {
        c = c.with_c(v);
    }
    if let Some(v) = m.j {
        c = c.with_j(v);
    }
    if let Some(v) = m.epsilon {
        c = c.with_epsilon(v);
    }
    if let Some(v) = m.max_iters {
        c = c.with_max_iters(v);
    }
    Ok((feature, c))
}

/// Features for `corpus` built from a fixed vocabulary or embedding table.
fn features_with(
    corpus: &Corpus,
    kind: FeatureKind,
    vocab: Option<&Vocabulary>,
    table: Option<&EmbeddingTable>,
) -> anyhow::Result<FeatureMatrix> {
    Ok(match kind {
        FeatureKind::UniBi => {
            FeatureMatrix::Sparse(vectorize_corpus(corpus, vocab.context("uni-bi features need a vocabulary")?))
        }
        FeatureKind::W2vRow | FeatureKind::W2vCol => {
            let (raw, _) = embed_corpus(corpus, table.context("w2v features need an embedding table")?);
            let mode = if kind == FeatureKind::W2vRow { Normalization::Row } else { Normalization::Col };
            FeatureMatrix::Dense(normalize(&raw, mode))
        }
    })
}

fn train(a: &crate::TrainArgs, cfg: &FileConfig, seed: u64) -> anyhow::Result<Outcome> {
    let (feature, config) = model_config(&a.model, cfg)?;
    let corpus = load_one(&a.corpus)?;
    let (labeled, unlabeled) = corpus.labeled_split();
    if labeled.is_empty() {
        bail!("{} has no labeled citations", corpus.name());
    }
    let mut outputs = vec![output(&file_name(&a.out), "model-json", &["header", "weights", "intercept"])];
    let (vocab, table) = if feature == FeatureKind::UniBi {
        (Some(build_unibigram_vocab(&corpus)?), None)
    } else {
        (None, Some(embeddings(&a.embedding, &[&corpus], cfg, seed)?))
    };
    let x = features_with(&corpus, feature, vocab.as_ref(), table.as_ref())?;
    let y: Vec<_> = labeled.iter().map(|&i| corpus.citations()[i].label.expect("labeled")).collect();
    let x_unlabeled = (config.loss == Loss::Transductive && !unlabeled.is_empty()).then(|| x.select(&unlabeled));
    let model = svm::train(&x.select(&labeled), &y, x_unlabeled.as_ref(), &config)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    model.save(&a.out)?;
    if let Some(v) = &vocab {
        let vp = sibling(&a.out, ".vocab.tsv");
        v.save(&vp)?;
        outputs.push(output(&file_name(&vp), "vocab-tsv", &["term", "index", "df"]));
    }
    println!(
        "trained {} on {} citations ({} unlabeled), dimension {}",
        config.loss.as_str(),
        labeled.len(),
        unlabeled.len(),
        model.dim()
    );
    Ok(Outcome {
        out: a.out.clone(),
        is_dir: false,
        outputs,
        parameters: json!({ "args": a, "feature": feature.as_str(), "train": model.config }),
    })
}

fn score(a: &crate::ScoreArgs) -> anyhow::Result<Outcome> {
    let feature = parse_feature(&a.feature)?;
    let model = LinearModel::load(&a.model)?;
    let corpus = load_one(&a.corpus)?;
    let (vocab, table) = match feature {
        FeatureKind::UniBi => {
            let vp = a.vocab.clone().unwrap_or_else(|| sibling(&a.model, ".vocab.tsv"));
            (Some(Vocabulary::load(&vp)?), None)
        }
        _ => {
            let p = a.embeddings.as_ref().ok_or_else(|| usage("w2v features need --embeddings"))?;
            (None, Some(EmbeddingTable::load(p)?))
        }
    };
    let x = features_with(&corpus, feature, vocab.as_ref(), table.as_ref())?;
    let scores = svm::score_citations(&model, &x)?;
    let mut w = csv::Writer::from_writer(create(&a.out)?);
    w.write_record(SCORES_CSV_HEADER)?;
    for (c, s) in corpus.citations().iter().zip(&scores) {
        let predicted = if model.predict(*s).is_relevant() { "1" } else { "0" };
        let label = match c.label {
            Some(l) if l.is_relevant() => "1",
            Some(_) => "0",
            None => "",
        };
        w.write_record([c.id.as_str(), &format!("{s}"), predicted, label])?;
    }
    w.flush()?;
    Ok(Outcome {
        out: a.out.clone(),
        is_dir: false,
        outputs: vec![output(&file_name(&a.out), "scores", &SCORES_CSV_HEADER)],
        parameters: json!({ "args": a }),
    })
}

fn rate(a: &crate::RateArgs, cfg: &FileConfig, seed: u64) -> anyhow::Result<Outcome> {
    let corpus = load_one(&a.corpus)?;
    let (labeled_idx, unlabeled_idx) = corpus.labeled_split();
    let labeled = corpus.subset(format!("{}-labeled", corpus.name()), &labeled_idx);
    let unlabeled = match &a.unlabeled {
        Some(p) => load_corpus_with_label_field(p, CorpusFormat::from_path(p), &a.corpus.label_field)
            .with_context(|| format!("loading corpus {}", p.display()))?,
        None => corpus.subset(format!("{}-unlabeled", corpus.name()), &unlabeled_idx),
    };
    if labeled.is_empty() {
        bail!("{} has no labeled citations", corpus.name());
    }
    if unlabeled.is_empty() {
        bail!("nothing to rate: {} has no unlabeled citations", corpus.name());
    }
    let ensemble = cfg.ensemble();
    ensemble.validate().map_err(|e| usage(e.to_string()))?;
    let table = embeddings(&a.embedding, &[&labeled, &unlabeled], cfg, seed)?;
    let rated = relrank(&labeled, &unlabeled, &ensemble, Some(&table))?;
    let stars = assign_stars(&rated, &ensemble);
    report::write_ratings_csv(&rated, &stars, create(&a.out)?)?;
    let mut counts = [0usize; 5];
    for &s in &stars {
        counts[usize::from(s) - 1] += 1;
    }
    println!(
        "rated {} citations; stars 1..5: {:?}",
        rated.len(),
        counts
    );
    Ok(Outcome {
        out: a.out.clone(),
        is_dir: false,
        outputs: vec![output(&file_name(&a.out), "ratings", &report::RATINGS_CSV_HEADER)],
        parameters: json!({ "args": a, "ensemble": ensemble, "embedding_dim": table.dim() }),
    })
}

fn evaluate(a: &crate::EvaluateArgs, cfg: &FileConfig, seed: u64) -> anyhow::Result<Outcome> {
    let mut methods = parse_method_ids(&a.methods).map_err(|e| usage(e.to_string()))?;
    for m in &mut methods {
        m.config = cfg.apply_svm(m.config);
    }
    let reps = a.reps.or(cfg.stats.reps).unwrap_or(DEFAULT_REPS);
    let folds = a.folds.or(cfg.stats.folds).unwrap_or(DEFAULT_FOLDS);
    if reps == 0 || folds < 2 {
        return Err(usage("need --reps ≥ 1 and --folds ≥ 2"));
    }
    let corpora = load_corpora(&a.corpus)?;
    let table = if methods.iter().any(|m| m.feature.needs_embeddings()) {
        let refs: Vec<&Corpus> = corpora.iter().collect();
        Some(embeddings(&a.embedding, &refs, cfg, seed)?)
    } else {
        None
    };
    let contexts: Vec<FeatureContext> = corpora
        .par_iter()
        .map(|c| FeatureContext::build(c, table.as_ref()))
        .collect::<screenkit::Result<_>>()?;
    let datasets: Vec<GridDataset> = corpora
        .iter()
        .zip(&contexts)
        .map(|(corpus, context)| GridDataset { corpus, context })
        .collect();
    let run = run_experiment_grid(&datasets, &methods, reps, folds, seed)?;
    let failed = run.evaluations.iter().filter(|e| e.report.is_none()).count();
    if failed > 0 {
        log::warn!("{failed} of {} fold evaluations failed", run.evaluations.len());
    }
    create_dir(&a.out)?;
    write_evaluations_csv(&run.evaluations, create(&a.out.join("evaluations.csv"))?)?;
    run.grid.write_csv(create(&a.out.join("grid.csv"))?)?;
    let mut w = csv::Writer::from_writer(create(&a.out.join("datasets.csv"))?);
    w.write_record(DATASETS_CSV_HEADER)?;
    for (c, ctx) in corpora.iter().zip(&contexts) {
        let (p, g) = prevalence(c)?;
        w.write_record([
            c.name().to_string(),
            c.len().to_string(),
            c.relevant_count().to_string(),
            format!("{p}"),
            g.as_str().to_string(),
            ctx.uncovered.to_string(),
        ])?;
    }
    w.flush()?;
    println!(
        "{} datasets × {} methods × {reps}×{folds} folds; {failed} failed",
        corpora.len(),
        methods.len()
    );
    Ok(Outcome {
        out: a.out.clone(),
        is_dir: true,
        outputs: vec![
            output("evaluations.csv", "evaluations", &EVALUATION_CSV_HEADER),
            output("grid.csv", "grid", &GRID_CSV_HEADER),
            output("datasets.csv", "datasets", &DATASETS_CSV_HEADER),
        ],
        parameters: json!({
            "args": a,
            "reps": reps,
            "folds": folds,
            "methods": methods.iter().map(|m| json!({"id": m.id, "name": m.name(), "config": m.config})).collect::<Vec<_>>(),
            "embedding_dim": table.as_ref().map(EmbeddingTable::dim),
        }),
    })
}

fn read_dataset_groups(path: &Path) -> anyhow::Result<BTreeMap<String, PrevalenceGroup>> {
    let mut r = csv::Reader::from_reader(File::open(path).with_context(|| format!("cannot open {}", path.display()))?);
    let headers = r.headers()?.clone();
    let di = headers.iter().position(|h| h == "dataset").context("datasets table lacks a dataset column")?;
    let gi = headers.iter().position(|h| h == "group").context("datasets table lacks a group column")?;
    let mut out = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        let g = PrevalenceGroup::parse(&rec[gi]).with_context(|| format!("bad group {:?}", &rec[gi]))?;
        out.insert(rec[di].to_string(), g);
    }
    Ok(out)
}

fn parse_metrics(s: &str) -> anyhow::Result<Vec<Metric>> {
    if s == "all" {
        return Ok(Metric::ALL.to_vec());
    }
    s.split(',')
        .map(|m| Metric::parse(m.trim()).ok_or_else(|| usage(format!("unknown metric {m:?}"))))
        .collect()
}

fn parse_groups(s: &str) -> anyhow::Result<Vec<Option<PrevalenceGroup>>> {
    s.split(',')
        .map(|g| match g.trim() {
            "all" => Ok(None),
            other => PrevalenceGroup::parse(other)
                .map(Some)
                .ok_or_else(|| usage(format!("unknown prevalence group {other:?}"))),
        })
        .collect()
}

struct GroupedResult {
    metric: Metric,
    group: String,
    datasets: usize,
    anova: Option<Anova>,
    groups: RankGroups,
}

#[allow(clippy::too_many_arguments)]
fn grouped(
    grid: &ExperimentGrid,
    ds_groups: &BTreeMap<String, PrevalenceGroup>,
    metrics: &[Metric],
    groups: &[Option<PrevalenceGroup>],
    methods: &[u32],
    alpha: f64,
    gate: bool,
) -> anyhow::Result<Vec<GroupedResult>> {
    if methods.len() < 2 {
        return Err(usage("rank groups need at least 2 methods"));
    }
    let mut out = Vec::new();
    for &metric in metrics {
        for &group in groups {
            let datasets: Vec<String> = grid
                .datasets()
                .into_iter()
                .filter(|d| group.is_none_or(|g| ds_groups.get(d) == Some(&g)))
                .collect();
            let label = group.map_or("all", PrevalenceGroup::as_str).to_string();
            if datasets.is_empty() {
                log::warn!("no datasets in prevalence group {label}");
                continue;
            }
            let anova = anova_two_factor(grid, metric, &datasets, methods).ok();
            let mut rg = equivalence_groups(grid, metric, &datasets, methods, alpha)?;
            if gate && anova.as_ref().is_some_and(|a| a.method.p >= alpha) {
                let best = rg.groups[0].clone();
                let mut all: Vec<u32> = methods.to_vec();
                all.sort_unstable();
                rg.groups = vec![RankGroup {
                    methods: all,
                    p_values: Vec::new(),
                    ..best
                }];
            }
            out.push(GroupedResult {
                metric,
                group: label,
                datasets: datasets.len(),
                anova,
                groups: rg,
            });
        }
    }
    Ok(out)
}

fn write_anova_csv(results: &[GroupedResult], path: &Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(ANOVA_CSV_HEADER)?;
    let num = |v: f64| format_value(v.is_finite().then_some(v));
    for r in results {
        let row: Vec<String> = match &r.anova {
            Some(a) => vec![
                r.metric.as_str().into(),
                r.group.clone(),
                r.datasets.to_string(),
                a.dropped_datasets.len().to_string(),
                num(a.method.f),
                num(a.method.p),
                a.method.df.to_string(),
                num(a.data.f),
                num(a.data.p),
                a.data.df.to_string(),
                a.residual_df.to_string(),
            ],
            None => {
                let mut v = vec![r.metric.as_str().into(), r.group.clone(), r.datasets.to_string()];
                v.extend(std::iter::repeat_n("NA".to_string(), 8));
                v
            }
        };
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn grid_methods(grid: &ExperimentGrid, spec: Option<&str>) -> anyhow::Result<Vec<u32>> {
    match spec {
        None => Ok(grid.methods()),
        Some(s) => s
            .split(',')
            .map(|t| t.trim().parse::<u32>().map_err(|_| usage(format!("bad method id {t:?}"))))
            .collect(),
    }
}

fn rankgroups(a: &crate::RankgroupsArgs, cfg: &FileConfig) -> anyhow::Result<Outcome> {
    let grid = ExperimentGrid::read_csv(File::open(&a.grid).with_context(|| format!("cannot open {}", a.grid.display()))?)?;
    let ds_path = a
        .datasets
        .clone()
        .unwrap_or_else(|| a.grid.with_file_name("datasets.csv"));
    let ds_groups = read_dataset_groups(&ds_path)?;
    let metrics = parse_metrics(&a.metric)?;
    let groups = parse_groups(&a.group)?;
    let methods = grid_methods(&grid, a.methods.as_deref())?;
    let alpha = a.alpha.or(cfg.stats.alpha).unwrap_or(DEFAULT_ALPHA);
    let results = grouped(&grid, &ds_groups, &metrics, &groups, &methods, alpha, a.gate)?;
    let sets: Vec<(String, RankGroups)> = results.iter().map(|r| (r.group.clone(), r.groups.clone())).collect();
    report::write_rank_groups_csv(&sets, create(&a.out)?)?;
    let anova_path = sibling(&a.out, ".anova.csv");
    write_anova_csv(&results, &anova_path)?;
    for r in &results {
        if let Some(an) = &r.anova {
            log::info!("{} {}: method p = {}", r.metric.as_str(), r.group, an.method.p);
        }
    }
    Ok(Outcome {
        out: a.out.clone(),
        is_dir: false,
        outputs: vec![
            output(&file_name(&a.out), "rank-groups", &report::RANK_GROUPS_CSV_HEADER),
            output(&file_name(&anova_path), "anova", &ANOVA_CSV_HEADER),
        ],
        parameters: json!({ "args": a, "alpha": alpha, "methods": methods }),
    })
}

fn al_trace_name(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn simulate_al(a: &crate::SimulateAlArgs, cfg: &FileConfig, seed: u64) -> anyhow::Result<Outcome> {
    let feature = parse_feature(&a.feature)?;
    let loss = parse_loss(&a.loss)?;
    let d = ALConfig::default();
    let al = ALConfig {
        seed_relevant: cfg.active.seed_relevant.unwrap_or(d.seed_relevant),
        seed_irrelevant: cfg.active.seed_irrelevant.unwrap_or(d.seed_irrelevant),
        batch_size: cfg.active.batch_size.unwrap_or(d.batch_size),
        repeats: a.repeats.or(cfg.active.repeats).unwrap_or(d.repeats),
        train: cfg.apply_svm(TrainConfig::new(loss, a.bias)),
        seed,
    };
    let bins = a.bins.or(cfg.active.bins).unwrap_or(DEFAULT_BINS);
    if bins == 0 || al.repeats == 0 {
        return Err(usage("need --bins ≥ 1 and --repeats ≥ 1"));
    }
    let corpora = load_corpora(&a.corpus)?;
    let table = if feature.needs_embeddings() {
        let refs: Vec<&Corpus> = corpora.iter().collect();
        Some(embeddings(&a.embedding, &refs, cfg, seed)?)
    } else {
        None
    };
    create_dir(&a.out)?;
    let mut outputs = Vec::new();
    let mut summaries: Vec<(String, ALSummary)> = Vec::new();
    for c in &corpora {
        let labels = c.labels()?;
        let ctx = FeatureContext::build(c, table.as_ref())?;
        let s = simulate(ctx.features(feature)?, &labels, &al).with_context(|| format!("simulating {}", c.name()))?;
        let stem = al_trace_name(c.name());
        let trace_file = format!("traces_{stem}.csv");
        report::write_traces_csv(&s.traces, create(&a.out.join(&trace_file))?)?;
        outputs.push(output(&trace_file, "al-trace", &report::TRACE_CSV_HEADER));
        let first = &s.traces[0];
        let svg = report::inclusion_curve_svg(&first.inclusion_curve(), first.total, first.relevant_total, c.name());
        let svg_file = format!("inclusion_{stem}.svg");
        fs::write(a.out.join(&svg_file), svg)?;
        outputs.push(output(&svg_file, "inclusion-svg", &[]));
        println!("{}: mean screened fraction {:.4} over {} runs", c.name(), s.mean_fraction, s.fractions.len());
        summaries.push((c.name().to_string(), s));
    }
    let rows: Vec<(String, &ALSummary)> = summaries.iter().map(|(n, s)| (n.clone(), s)).collect();
    report::write_al_aggregate_csv(&rows, create(&a.out.join("aggregate.csv"))?)?;
    let mut w = csv::Writer::from_writer(create(&a.out.join("fractions.csv"))?);
    w.write_record(FRACTIONS_CSV_HEADER)?;
    for (n, s) in &summaries {
        for (i, f) in s.fractions.iter().enumerate() {
            w.write_record([n.clone(), i.to_string(), format!("{f}")])?;
        }
    }
    w.flush()?;
    let means: Vec<f64> = summaries.iter().map(|(_, s)| s.mean_fraction).collect();
    let hist = screened_histogram(&means, bins)?;
    report::write_histogram_csv(&hist, create(&a.out.join("histogram.csv"))?)?;
    fs::write(a.out.join("histogram.svg"), report::histogram_svg(&hist, "mean fraction screened per review"))?;
    outputs.extend([
        output("aggregate.csv", "al-aggregate", &report::AL_AGGREGATE_CSV_HEADER),
        output("fractions.csv", "al-fractions", &FRACTIONS_CSV_HEADER),
        output("histogram.csv", "histogram", &report::HISTOGRAM_CSV_HEADER),
        output("histogram.svg", "histogram-svg", &[]),
    ]);
    Ok(Outcome {
        out: a.out.clone(),
        is_dir: true,
        outputs,
        parameters: json!({ "args": a, "active": al, "bins": bins, "embedding_dim": table.as_ref().map(EmbeddingTable::dim) }),
    })
}

fn read_traces(path: &Path) -> anyhow::Result<BTreeMap<usize, Vec<ALStep>>> {
    let mut r = csv::Reader::from_reader(File::open(path).with_context(|| format!("cannot open {}", path.display()))?);
    if r.headers()?.iter().collect::<Vec<_>>() != report::TRACE_CSV_HEADER {
        bail!("{} is not a trace CSV", path.display());
    }
    let mut out: BTreeMap<usize, Vec<ALStep>> = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        let n = |i: usize| rec[i].parse::<usize>().with_context(|| format!("bad number {:?}", &rec[i]));
        out.entry(n(0)?).or_default().push(ALStep {
            iteration: n(1)?,
            screened: n(2)?,
            found: n(3)?,
        });
    }
    Ok(out)
}

fn read_mean_fractions(path: &Path) -> anyhow::Result<Vec<f64>> {
    let mut r = csv::Reader::from_reader(File::open(path).with_context(|| format!("cannot open {}", path.display()))?);
    let headers = r.headers()?.clone();
    let col = headers
        .iter()
        .position(|h| h == "mean_fraction")
        .with_context(|| format!("{} lacks a mean_fraction column", path.display()))?;
    r.records()
        .map(|rec| {
            let rec = rec?;
            rec[col].parse::<f64>().with_context(|| format!("bad fraction {:?}", &rec[col]))
        })
        .collect()
}

fn write_rank_detail_csv(grid: &ExperimentGrid, results: &[GroupedResult], ds: &BTreeMap<String, PrevalenceGroup>, path: &Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(RANK_DETAIL_CSV_HEADER)?;
    for r in results {
        let datasets: Vec<String> = grid
            .datasets()
            .into_iter()
            .filter(|d| r.group == "all" || ds.get(d).map(|g| g.as_str()) == Some(r.group.as_str()))
            .collect();
        for (k, g) in r.groups.groups.iter().enumerate() {
            for &m in &g.methods {
                let vals: Vec<f64> = datasets.iter().filter_map(|d| grid.value(d, m, r.metric)).collect();
                let mean = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
                let p = g.p_values.iter().find(|(id, _)| *id == m).map(|&(_, p)| p);
                w.write_record([
                    r.metric.as_str().to_string(),
                    r.group.clone(),
                    (k + 1).to_string(),
                    m.to_string(),
                    u8::from(m == g.best).to_string(),
                    format_value(mean),
                    format_value(p),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn report_cmd(a: &crate::ReportArgs, cfg: &FileConfig) -> anyhow::Result<Outcome> {
    create_dir(&a.out)?;
    let alpha = a.alpha.or(cfg.stats.alpha).unwrap_or(DEFAULT_ALPHA);
    let bins = a.bins.or(cfg.active.bins).unwrap_or(DEFAULT_BINS);
    let outputs = match a.kind.as_str() {
        "metric-table" | "metric_table" | "rank-groups" | "rank_groups" => {
            let grid =
                ExperimentGrid::read_csv(File::open(&a.input).with_context(|| format!("cannot open {}", a.input.display()))?)?;
            let ds_path = a.datasets.clone().unwrap_or_else(|| a.input.with_file_name("datasets.csv"));
            let ds = read_dataset_groups(&ds_path)?;
            let groups: Vec<Option<PrevalenceGroup>> = PrevalenceGroup::ALL.iter().copied().map(Some).collect();
            let results = grouped(&grid, &ds, &Metric::ALL, &groups, &grid.methods(), alpha, false)?;
            if a.kind.starts_with("metric") {
                let sets: Vec<(String, RankGroups)> = results.iter().map(|r| (r.group.clone(), r.groups.clone())).collect();
                report::write_rank_groups_csv(&sets, create(&a.out.join("metric_table.csv"))?)?;
                vec![output("metric_table.csv", "rank-groups", &report::RANK_GROUPS_CSV_HEADER)]
            } else {
                write_rank_detail_csv(&grid, &results, &ds, &a.out.join("rank_groups.csv"))?;
                write_anova_csv(&results, &a.out.join("anova.csv"))?;
                vec![
                    output("rank_groups.csv", "rank-detail", &RANK_DETAIL_CSV_HEADER),
                    output("anova.csv", "anova", &ANOVA_CSV_HEADER),
                ]
            }
        }
        "al-histogram" | "al_histogram" => {
            let fractions = read_mean_fractions(&a.input)?;
            let hist = screened_histogram(&fractions, bins)?;
            report::write_histogram_csv(&hist, create(&a.out.join("histogram.csv"))?)?;
            fs::write(a.out.join("histogram.svg"), report::histogram_svg(&hist, "mean fraction screened per review"))?;
            vec![
                output("histogram.csv", "histogram", &report::HISTOGRAM_CSV_HEADER),
                output("histogram.svg", "histogram-svg", &[]),
            ]
        }
        "inclusion-curve" | "inclusion_curve" => {
            let traces = read_traces(&a.input)?;
            let steps = traces
                .get(&a.run)
                .with_context(|| format!("run {} not in {}", a.run, a.input.display()))?;
            let last = steps.last().context("empty trace")?;
            let trace = ALTrace {
                steps: steps.clone(),
                total: last.screened,
                relevant_total: last.found,
                screened_fraction: 1.0,
                revealed: Vec::new(),
            };
            let curve = trace.inclusion_curve();
            let mut w = csv::Writer::from_writer(create(&a.out.join("inclusion.csv"))?);
            w.write_record(INCLUSION_CSV_HEADER)?;
            for (s, r) in &curve {
                w.write_record([s.to_string(), r.to_string()])?;
            }
            w.flush()?;
            fs::write(
                a.out.join("inclusion.svg"),
                report::inclusion_curve_svg(&curve, trace.total, trace.relevant_total, &format!("run {}", a.run)),
            )?;
            vec![
                output("inclusion.csv", "inclusion", &INCLUSION_CSV_HEADER),
                output("inclusion.svg", "inclusion-svg", &[]),
            ]
        }
        other => {
            return Err(usage(format!(
                "unknown report kind {other:?} (metric-table, rank-groups, al-histogram, inclusion-curve)"
            )))
        }
    };
    let mut sink = std::io::stdout().lock();
    for o in &outputs {
        writeln!(sink, "{}", a.out.join(&o.path).display())?;
    }
    Ok(Outcome {
        out: a.out.clone(),
        is_dir: true,
        outputs,
        parameters: json!({ "args": a, "alpha": alpha, "bins": bins }),
    })
}
