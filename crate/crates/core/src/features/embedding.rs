use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::{Citation, Corpus};
use crate::error::{Error, Result};

use super::dense::DenseMatrix;
use super::tokenize::citation_tokens;

const TSV_MAGIC: &str = "#screenkit-embeddings";
const TSV_VERSION: u32 = 1;

/// Word vectors of a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<f32>,
    dim: usize,
    pub window: usize,
    pub min_count: usize,
}

impl EmbeddingTable {
    pub fn new(words: Vec<String>, vectors: Vec<f32>, dim: usize, window: usize, min_count: usize) -> Self {
        assert_eq!(words.len() * dim, vectors.len());
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        EmbeddingTable {
            words,
            index,
            vectors,
            dim,
            window,
            min_count,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn vector(&self, word: &str) -> Option<&[f32]> {
        self.index.get(word).map(|&i| self.row(i))
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    fn require(&self, word: &str) -> Result<usize> {
        self.index
            .get(word)
            .copied()
            .ok_or_else(|| Error::OutOfVocabulary(word.to_string()))
    }

    pub fn to_tsv(&self) -> String {
        let mut s = format!(
            "{TSV_MAGIC}\tv{TSV_VERSION}\tdim={}\twindow={}\tmin_count={}\n",
            self.dim, self.window, self.min_count
        );
        for (i, w) in self.words.iter().enumerate() {
            s.push_str(w);
            for v in self.row(i) {
                let _ = write!(s, "\t{v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_tsv(text: &str) -> Result<EmbeddingTable> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty embedding file".into()))?;
        let fields: Vec<&str> = header.split('\t').collect();
        if fields.first() != Some(&TSV_MAGIC) || fields.get(1) != Some(&"v1") {
            return Err(Error::Format(format!("unsupported embedding header: {header}")));
        }
        let param = |key: &str| -> Result<usize> {
            fields
                .iter()
                .find_map(|f| f.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Format(format!("embedding header lacks {key}")))
        };
        let dim = param("dim")?;
        let window = param("window")?;
        let min_count = param("min_count")?;
        let mut words = Vec::new();
        let mut vectors = Vec::new();
        for (ln, line) in lines.enumerate() {
            let mut parts = line.split('\t');
            let word = parts.next().unwrap_or_default().to_string();
            let before = vectors.len();
            for p in parts {
                vectors.push(p.parse::<f32>().map_err(|_| {
                    Error::Format(format!("embedding line {}: bad value {p:?}", ln + 2))
                })?);
            }
            if vectors.len() - before != dim {
                return Err(Error::Format(format!("embedding line {}: expected {dim} values", ln + 2)));
            }
            words.push(word);
        }
        Ok(EmbeddingTable::new(words, vectors, dim, window, min_count))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<EmbeddingTable> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        EmbeddingTable::from_tsv(&text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedCitation {
    pub vector: Vec<f64>,
    /// False when no token of the citation is in the table (vector is zero).
    pub covered: bool,
}

/// Mean embedding of the citation's in-table tokens.
pub fn embed_citation(citation: &Citation, table: &EmbeddingTable) -> EmbeddedCitation {
    let mut sum = vec![0.0f64; table.dim];
    let mut count = 0usize;
    for tok in citation_tokens(citation) {
        if let Some(v) = table.vector(&tok) {
            for (s, &x) in sum.iter_mut().zip(v) {
                *s += x as f64;
            }
            count += 1;
        }
    }
    if count > 0 {
        let inv = 1.0 / count as f64;
        sum.iter_mut().for_each(|s| *s *= inv);
    }
    EmbeddedCitation {
        vector: sum,
        covered: count > 0,
    }
}

/// Raw (unnormalized) embedding matrix of a corpus and the number of uncovered citations.
pub fn embed_corpus(corpus: &Corpus, table: &EmbeddingTable) -> (DenseMatrix, usize) {
    let mut data = Vec::with_capacity(corpus.len() * table.dim);
    let mut uncovered = 0;
    for c in corpus.citations() {
        let e = embed_citation(c, table);
        if !e.covered {
            uncovered += 1;
        }
        data.extend(e.vector);
    }
    if uncovered > 0 {
        log::warn!("{}: {uncovered} citations have no embedded tokens", corpus.name());
    }
    (DenseMatrix::new(corpus.len(), table.dim, data), uncovered)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    Cosine(String, String),
    Neighbors(String, usize),
    /// Words closest to `b - a + c`.
    Analogy(String, String, String, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryResult {
    Cosine(f64),
    Ranked(Vec<(String, f64)>),
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

fn top_k(table: &EmbeddingTable, target: &[f64], exclude: &[usize], k: usize) -> Vec<(String, f64)> {
    let mut scored: Vec<(usize, f64)> = (0..table.len())
        .filter(|i| !exclude.contains(i))
        .map(|i| {
            let v: Vec<f64> = table.row(i).iter().map(|&x| x as f64).collect();
            (i, cosine(target, &v))
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored
        .into_iter()
        .take(k)
        .map(|(i, s)| (table.words[i].clone(), s))
        .collect()
}

pub fn similarity_query(table: &EmbeddingTable, query: &Query) -> Result<QueryResult> {
    let vec64 = |i: usize| -> Vec<f64> { table.row(i).iter().map(|&x| x as f64).collect() };
    match query {
        Query::Cosine(a, b) => {
            let (ia, ib) = (table.require(a)?, table.require(b)?);
            Ok(QueryResult::Cosine(cosine(&vec64(ia), &vec64(ib))))
        }
        Query::Neighbors(w, k) => {
            let i = table.require(w)?;
            Ok(QueryResult::Ranked(top_k(table, &vec64(i), &[i], *k)))
        }
        Query::Analogy(a, b, c, k) => {
            let (ia, ib, ic) = (table.require(a)?, table.require(b)?, table.require(c)?);
            let (va, vb, vc) = (vec64(ia), vec64(ib), vec64(ic));
            let target: Vec<f64> = (0..table.dim).map(|j| vb[j] - va[j] + vc[j]).collect();
            Ok(QueryResult::Ranked(top_k(table, &target, &[ia, ib, ic], *k)))
        }
    }
}
