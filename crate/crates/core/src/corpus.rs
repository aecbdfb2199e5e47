//! Citation records, corpus ingestion and stratified fold generation.
//!
//! A corpus file is either JSONL (one object per line with `id`, `title`,
//! `abstract` and an optional `label` of `1`, `-1` or `null`) or CSV with the
//! header `id,title,abstract,label`.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::rng;

/// Relevance of a citation to the review question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Relevant,
    Irrelevant,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Relevant => 1.0,
            Label::Irrelevant => -1.0,
        }
    }

    pub fn from_sign(sign: f64) -> Label {
        if sign > 0.0 {
            Label::Relevant
        } else {
            Label::Irrelevant
        }
    }

    pub fn is_relevant(self) -> bool {
        self == Label::Relevant
    }

    fn parse_int(v: i64) -> Option<Label> {
        match v {
            1 => Some(Label::Relevant),
            -1 => Some(Label::Irrelevant),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Citation {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub label: Option<Label>,
}

impl Citation {
    pub fn new(
        id: impl Into<String>,
        title: impl Into<String>,
        abstract_text: impl Into<String>,
        label: Option<Label>,
    ) -> Self {
        Citation {
            id: id.into(),
            title: title.into(),
            abstract_text: abstract_text.into(),
            label,
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if self.title.trim().is_empty() && self.abstract_text.trim().is_empty() {
            return Err(format!("citation {} has neither title nor abstract", self.id));
        }
        Ok(())
    }
}

/// An ordered, duplicate-free collection of citations.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    name: String,
    citations: Vec<Citation>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, citations: Vec<Citation>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(citations.len());
        for (i, c) in citations.iter().enumerate() {
            c.validate()
                .map_err(|message| Error::MalformedRecord { line: i + 1, message })?;
            if !seen.insert(c.id.as_str()) {
                return Err(Error::DuplicateId(c.id.clone()));
            }
        }
        Ok(Corpus {
            name: name.into(),
            citations,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn citations(&self) -> &[Citation] {
        &self.citations
    }

    pub fn len(&self) -> usize {
        self.citations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.citations.is_empty()
    }

    pub fn labeled_count(&self) -> usize {
        self.citations.iter().filter(|c| c.label.is_some()).count()
    }

    pub fn unlabeled_count(&self) -> usize {
        self.len() - self.labeled_count()
    }

    pub fn relevant_count(&self) -> usize {
        self.citations
            .iter()
            .filter(|c| c.label == Some(Label::Relevant))
            .count()
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.citations.iter().all(|c| c.label.is_some())
    }

    /// Labels of a fully labeled corpus.
    pub fn labels(&self) -> Result<Vec<Label>> {
        self.citations
            .iter()
            .map(|c| c.label.ok_or_else(|| Error::Unlabeled(c.id.clone())))
            .collect()
    }

    /// Indices of labeled citations and of unlabeled ones, in corpus order.
    pub fn labeled_split(&self) -> (Vec<usize>, Vec<usize>) {
        (0..self.len()).partition(|&i| self.citations[i].label.is_some())
    }

    pub fn subset(&self, name: impl Into<String>, indices: &[usize]) -> Corpus {
        Corpus {
            name: name.into(),
            citations: indices.iter().map(|&i| self.citations[i].clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrevalenceGroup {
    Low,
    Mid,
    High,
}

impl PrevalenceGroup {
    pub const ALL: [PrevalenceGroup; 3] =
        [PrevalenceGroup::Low, PrevalenceGroup::Mid, PrevalenceGroup::High];

    /// Contiguous extension of the three reference prevalence ranges:
    /// Low below 6.79%, Mid in [6.79%, 13.45%), High from 13.45%.
    pub fn of(fraction: f64) -> PrevalenceGroup {
        // percent comparison avoids 0.0679 vs 6.79/100 rounding artefacts
        let pct = fraction * 100.0;
        if pct < 6.79 {
            PrevalenceGroup::Low
        } else if pct < 13.45 {
            PrevalenceGroup::Mid
        } else {
            PrevalenceGroup::High
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PrevalenceGroup::Low => "low",
            PrevalenceGroup::Mid => "mid",
            PrevalenceGroup::High => "high",
        }
    }

    pub fn parse(s: &str) -> Option<PrevalenceGroup> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Some(PrevalenceGroup::Low),
            "mid" => Some(PrevalenceGroup::Mid),
            "high" => Some(PrevalenceGroup::High),
            _ => None,
        }
    }
}

impl fmt::Display for PrevalenceGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fraction of relevant citations and its prevalence group.
pub fn prevalence(corpus: &Corpus) -> Result<(f64, PrevalenceGroup)> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus(corpus.name.clone()));
    }
    let labels = corpus.labels()?;
    let relevant = labels.iter().filter(|l| l.is_relevant()).count();
    let fraction = relevant as f64 / labels.len() as f64;
    Ok((fraction, PrevalenceGroup::of(fraction)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    pub fn from_path(path: &Path) -> CorpusFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

/// Loads a corpus named after the file stem. The label is read from `label`.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus> {
    load_corpus_with_label_field(path, format, "label")
}

pub fn load_corpus_with_label_field(
    path: &Path,
    format: CorpusFormat,
    label_field: &str,
) -> Result<Corpus> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("corpus")
        .to_string();
    let citations = match format {
        CorpusFormat::Jsonl => parse_jsonl(&text, label_field)?,
        CorpusFormat::Csv => parse_csv(&text, label_field)?,
    };
    if citations.is_empty() {
        return Err(Error::EmptyCorpus(path.display().to_string()));
    }
    let corpus = Corpus::new(name, citations)?;
    log::info!(
        "loaded {}: n={} labeled={} unlabeled={}",
        corpus.name,
        corpus.len(),
        corpus.labeled_count(),
        corpus.unlabeled_count()
    );
    Ok(corpus)
}

fn malformed(line: usize, message: impl Into<String>) -> Error {
    Error::MalformedRecord {
        line,
        message: message.into(),
    }
}

fn parse_jsonl(text: &str, label_field: &str) -> Result<Vec<Citation>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(raw).map_err(|e| malformed(line, e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| malformed(line, "record is not a JSON object"))?;
        let id = match obj.get("id") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => return Err(malformed(line, "missing id")),
        };
        let text_field = |key: &str| -> Result<String> {
            match obj.get(key) {
                Some(Value::String(s)) => Ok(s.clone()),
                Some(Value::Null) => Ok(String::new()),
                Some(_) => Err(malformed(line, format!("{key} is not a string"))),
                None => Err(malformed(line, format!("missing {key}"))),
            }
        };
        let title = text_field("title")?;
        let abstract_text = text_field("abstract")?;
        let label = match obj.get(label_field) {
            None | Some(Value::Null) => None,
            Some(Value::Number(n)) => Some(
                n.as_i64()
                    .and_then(Label::parse_int)
                    .ok_or_else(|| malformed(line, format!("label must be 1 or -1, got {n}")))?,
            ),
            Some(Value::String(s)) => parse_label_str(s).map_err(|m| malformed(line, m))?,
            Some(other) => return Err(malformed(line, format!("invalid label {other}"))),
        };
        let c = Citation::new(id, title, abstract_text, label);
        c.validate().map_err(|m| malformed(line, m))?;
        out.push(c);
    }
    Ok(out)
}

fn parse_label_str(s: &str) -> std::result::Result<Option<Label>, String> {
    let t = s.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("null") || t.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    t.parse::<i64>()
        .ok()
        .and_then(Label::parse_int)
        .map(Some)
        .ok_or_else(|| format!("label must be 1 or -1, got {t:?}"))
}

fn parse_csv(text: &str, label_field: &str) -> Result<Vec<Citation>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (id_col, title_col, abs_col) = match (col("id"), col("title"), col("abstract")) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(malformed(1, "header must contain id,title,abstract")),
    };
    let label_col = col(label_field);
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        // header is line 1
        let line = i + 2;
        let rec = rec.map_err(|e| malformed(line, e.to_string()))?;
        let get = |c: usize| rec.get(c).unwrap_or("").to_string();
        let label = match label_col {
            Some(c) => parse_label_str(&get(c)).map_err(|m| malformed(line, m))?,
            None => None,
        };
        let c = Citation::new(get(id_col), get(title_col), get(abs_col), label);
        c.validate().map_err(|m| malformed(line, m))?;
        out.push(c);
    }
    Ok(out)
}

/// Writes a corpus as JSONL in the ingestion format.
pub fn write_jsonl(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut buf = String::new();
    for c in &corpus.citations {
        let label = match c.label {
            Some(Label::Relevant) => Value::from(1),
            Some(Label::Irrelevant) => Value::from(-1),
            None => Value::Null,
        };
        let obj = serde_json::json!({
            "id": c.id,
            "title": c.title,
            "abstract": c.abstract_text,
            "label": label,
        });
        buf.push_str(&obj.to_string());
        buf.push('\n');
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Repeated stratified k-fold assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub repetitions: usize,
    pub k: usize,
    pub seed: u64,
    n: usize,
    /// `assignments[rep][fold]` holds sorted corpus indices of the test members.
    assignments: Vec<Vec<Vec<usize>>>,
}

impl FoldPlan {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn test_indices(&self, repetition: usize, fold: usize) -> &[usize] {
        &self.assignments[repetition][fold]
    }

    pub fn train_indices(&self, repetition: usize, fold: usize) -> Vec<usize> {
        let test = &self.assignments[repetition][fold];
        let mut j = 0;
        let mut out = Vec::with_capacity(self.n - test.len());
        for i in 0..self.n {
            if j < test.len() && test[j] == i {
                j += 1;
            } else {
                out.push(i);
            }
        }
        out
    }

    pub fn test_ids<'a>(&self, corpus: &'a Corpus, repetition: usize, fold: usize) -> Vec<&'a str> {
        self.test_indices(repetition, fold)
            .iter()
            .map(|&i| corpus.citations[i].id.as_str())
            .collect()
    }

    /// All (repetition, fold) pairs in evaluation order.
    pub fn splits(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.repetitions).flat_map(move |r| (0..self.k).map(move |f| (r, f)))
    }
}

/// Builds `repetitions` independent stratified k-fold partitions.
///
/// Relevant and irrelevant citations are shuffled separately and dealt
/// round-robin; the irrelevant deal starts where the relevant one stopped so
/// fold sizes also differ by at most one.
pub fn stratified_folds(
    corpus: &Corpus,
    repetitions: usize,
    k: usize,
    seed: u64,
) -> Result<FoldPlan> {
    let labels = corpus.labels()?;
    let n = labels.len();
    if k < 2 {
        return Err(Error::invalid("k must be at least 2"));
    }
    if k > n {
        return Err(Error::invalid(format!("k={k} exceeds corpus size {n}")));
    }
    let relevant: Vec<usize> = (0..n).filter(|&i| labels[i].is_relevant()).collect();
    let irrelevant: Vec<usize> = (0..n).filter(|&i| !labels[i].is_relevant()).collect();
    if relevant.is_empty() {
        return Err(Error::invalid(format!("{} has no relevant citations", corpus.name)));
    }
    if relevant.len() < k {
        log::warn!(
            "{}: only {} relevant citations for k={k}; some folds get none",
            corpus.name,
            relevant.len()
        );
    }
    let mut assignments = Vec::with_capacity(repetitions);
    for rep in 0..repetitions {
        let mut rng = rng::seeded(rng::derive_seed(seed, rep as u64));
        let mut pos = relevant.clone();
        let mut neg = irrelevant.clone();
        pos.shuffle(&mut rng);
        neg.shuffle(&mut rng);
        let mut folds = vec![Vec::with_capacity(n / k + 1); k];
        for (j, &i) in pos.iter().chain(neg.iter()).enumerate() {
            folds[j % k].push(i);
        }
        for f in &mut folds {
            f.sort_unstable();
        }
        assignments.push(folds);
    }
    Ok(FoldPlan {
        repetitions,
        k,
        seed,
        n,
        assignments,
    })
}
