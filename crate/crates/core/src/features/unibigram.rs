use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::{Citation, Corpus};
use crate::error::{Error, Result};

use super::matrix::SparseMatrix;
use super::tokenize::citation_segments;

/// Unigram and bigram terms. Bigrams are adjacent token pairs joined by one space.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, u32>,
    df: Vec<u32>,
}

/// Sparse term-count vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| (i as usize, v))
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        self.iter().map(|(i, v)| w[i] * v).sum()
    }

    pub fn sq_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

fn segment_terms(tokens: &[String], mut emit: impl FnMut(String)) {
    for t in tokens {
        emit(t.clone());
    }
    for pair in tokens.windows(2) {
        emit(format!("{} {}", pair[0], pair[1]));
    }
}

/// Uni/bi-gram counts of one token sequence, without a vocabulary.
pub fn term_counts(tokens: &[String]) -> HashMap<String, usize> {
    let mut out = HashMap::new();
    segment_terms(tokens, |t| *out.entry(t).or_insert(0) += 1);
    out
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: u32) -> &str {
        &self.terms[index as usize]
    }

    pub fn document_frequency(&self, index: u32) -> u32 {
        self.df[index as usize]
    }

    /// TSV with columns `term`, `index`, `df`.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("term\tindex\tdf\n");
        for (i, t) in self.terms.iter().enumerate() {
            let _ = writeln!(s, "{t}\t{i}\t{}", self.df[i]);
        }
        s
    }

    pub fn from_tsv(text: &str) -> Result<Vocabulary> {
        let mut v = Vocabulary::default();
        for (ln, line) in text.lines().enumerate().skip(1) {
            let mut parts = line.split('\t');
            let (Some(term), Some(idx), Some(df)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Format(format!("vocabulary line {}: expected 3 columns", ln + 1)));
            };
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::Format(format!("vocabulary line {}: bad index", ln + 1)))?;
            if idx != v.terms.len() {
                return Err(Error::Format(format!("vocabulary line {}: non-contiguous index", ln + 1)));
            }
            let df: u32 = df
                .parse()
                .map_err(|_| Error::Format(format!("vocabulary line {}: bad df", ln + 1)))?;
            v.index.insert(term.to_string(), idx as u32);
            v.terms.push(term.to_string());
            v.df.push(df);
        }
        Ok(v)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Vocabulary> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Vocabulary::from_tsv(&text)
    }
}

/// Vocabulary over every title/abstract uni- and bi-gram, indexed in order of first appearance.
pub fn build_unibigram_vocab(corpus: &Corpus) -> Result<Vocabulary> {
    let mut v = Vocabulary::default();
    let mut last_doc: Vec<usize> = Vec::new();
    for (doc, c) in corpus.citations().iter().enumerate() {
        for seg in citation_segments(c) {
            segment_terms(&seg, |t| {
                let idx = match v.index.get(&t) {
                    Some(&i) => i as usize,
                    None => {
                        let i = v.terms.len();
                        v.index.insert(t.clone(), i as u32);
                        v.terms.push(t);
                        v.df.push(0);
                        last_doc.push(usize::MAX);
                        i
                    }
                };
                if last_doc[idx] != doc {
                    last_doc[idx] = doc;
                    v.df[idx] += 1;
                }
            });
        }
    }
    if v.is_empty() {
        return Err(Error::EmptyCorpus(format!("{}: no tokens", corpus.name())));
    }
    Ok(v)
}

/// Term counts of a citation over `vocab`; unknown terms are dropped.
pub fn vectorize_unibigram(citation: &Citation, vocab: &Vocabulary) -> SparseVector {
    let mut ids = Vec::new();
    for seg in citation_segments(citation) {
        segment_terms(&seg, |t| {
            if let Some(i) = vocab.get(&t) {
                ids.push(i);
            }
        });
    }
    ids.sort_unstable();
    let mut out = SparseVector::default();
    for id in ids {
        if out.indices.last() == Some(&id) {
            *out.values.last_mut().unwrap() += 1.0;
        } else {
            out.indices.push(id);
            out.values.push(1.0);
        }
    }
    out
}

pub fn vectorize_corpus(corpus: &Corpus, vocab: &Vocabulary) -> SparseMatrix {
    SparseMatrix::new(
        vocab.len(),
        corpus
            .citations()
            .iter()
            .map(|c| vectorize_unibigram(c, vocab))
            .collect(),
    )
}
