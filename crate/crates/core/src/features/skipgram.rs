//! Skip-gram word embeddings trained with negative sampling.
//!
//! Single-threaded and fully deterministic for a fixed seed: the word order,
//! initialization, subsampling, window shrinking and negative draws all come
//! from one seeded generator.

use std::collections::HashMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::rng;

use super::embedding::EmbeddingTable;
use super::tokenize::citation_segments;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub min_count: usize,
    pub epochs: usize,
    pub negative: usize,
    pub learning_rate: f32,
    pub min_learning_rate: f32,
    /// Frequent-word subsampling threshold; 0 disables it.
    pub sample: f64,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dim: 100,
            window: 5,
            min_count: 15,
            epochs: 5,
            negative: 5,
            learning_rate: 0.025,
            min_learning_rate: 0.0001,
            sample: 1e-3,
            seed: 1,
        }
    }
}

struct NoiseDistribution {
    cumulative: Vec<f64>,
}

impl NoiseDistribution {
    fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(0.75);
                acc
            })
            .collect();
        NoiseDistribution { cumulative }
    }

    fn draw(&self, r: &mut rng::Rng) -> usize {
        let total = *self.cumulative.last().unwrap();
        let u = r.gen::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }
}

#[inline]
fn sigmoid(x: f32) -> f32 {
    if x > 6.0 {
        1.0
    } else if x < -6.0 {
        0.0
    } else {
        1.0 / (1.0 + (-x).exp())
    }
}

pub fn train_skipgram(corpora: &[&Corpus], config: &SkipGramConfig) -> Result<EmbeddingTable> {
    if config.dim < 2 {
        return Err(Error::invalid("embedding dimension must be at least 2"));
    }
    if config.window == 0 || config.epochs == 0 {
        return Err(Error::invalid("window and epochs must be positive"));
    }
    let segments: Vec<Vec<String>> = corpora
        .iter()
        .flat_map(|c| c.citations().iter())
        .flat_map(citation_segments)
        .filter(|s| !s.is_empty())
        .collect();

    let mut freq: HashMap<&str, u64> = HashMap::new();
    for seg in &segments {
        for t in seg {
            *freq.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<(&str, u64)> = freq
        .into_iter()
        .filter(|&(_, c)| c >= config.min_count as u64)
        .collect();
    if kept.is_empty() {
        return Err(Error::invalid(format!(
            "no word occurs at least min_count={} times",
            config.min_count
        )));
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let index: HashMap<&str, usize> = kept.iter().enumerate().map(|(i, (w, _))| (*w, i)).collect();
    let counts: Vec<u64> = kept.iter().map(|&(_, c)| c).collect();
    let sentences: Vec<Vec<usize>> = segments
        .iter()
        .map(|s| s.iter().filter_map(|t| index.get(t.as_str()).copied()).collect::<Vec<_>>())
        .filter(|s: &Vec<usize>| s.len() > 1)
        .collect();
    let train_words: u64 = counts.iter().sum();

    let vocab = kept.len();
    let dim = config.dim;
    let mut r = rng::seeded(config.seed);
    let mut input: Vec<f32> = (0..vocab * dim)
        .map(|_| (r.gen::<f32>() - 0.5) / dim as f32)
        .collect();
    let mut output = vec![0.0f32; vocab * dim];
    let noise = NoiseDistribution::new(&counts);

    let keep_prob: Vec<f64> = counts
        .iter()
        .map(|&c| {
            if config.sample <= 0.0 {
                return 1.0;
            }
            let threshold = config.sample * train_words as f64;
            let f = c as f64;
            ((f / threshold).sqrt() + 1.0) * threshold / f
        })
        .collect();

    let total = (config.epochs as u64 * train_words).max(1) as f64;
    let mut processed: u64 = 0;
    let mut grad = vec![0.0f32; dim];
    let mut kept_words: Vec<usize> = Vec::new();

    for _epoch in 0..config.epochs {
        for sentence in &sentences {
            processed += sentence.len() as u64;
            let progress = (processed as f64 / total).min(1.0) as f32;
            let lr = (config.learning_rate * (1.0 - progress)).max(config.min_learning_rate);
            kept_words.clear();
            for &w in sentence {
                if keep_prob[w] >= 1.0 || r.gen::<f64>() < keep_prob[w] {
                    kept_words.push(w);
                }
            }
            for (pos, &center) in kept_words.iter().enumerate() {
                let shrink = r.gen_range(0..config.window);
                let span = config.window - shrink;
                let lo = pos.saturating_sub(span);
                let hi = (pos + span).min(kept_words.len() - 1);
                for ctx_pos in lo..=hi {
                    if ctx_pos == pos {
                        continue;
                    }
                    let context = kept_words[ctx_pos];
                    let l1 = context * dim;
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for d in 0..=config.negative {
                        let (target, label) = if d == 0 {
                            (center, 1.0f32)
                        } else {
                            let t = noise.draw(&mut r);
                            if t == center {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let l2 = target * dim;
                        let dot: f32 = input[l1..l1 + dim]
                            .iter()
                            .zip(&output[l2..l2 + dim])
                            .map(|(a, b)| a * b)
                            .sum();
                        let g = (label - sigmoid(dot)) * lr;
                        for j in 0..dim {
                            grad[j] += g * output[l2 + j];
                            output[l2 + j] += g * input[l1 + j];
                        }
                    }
                    for j in 0..dim {
                        input[l1 + j] += grad[j];
                    }
                }
            }
        }
    }

    let words = kept.iter().map(|(w, _)| w.to_string()).collect();
    Ok(EmbeddingTable::new(words, input, dim, config.window, config.min_count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Citation;
    use crate::features::{similarity_query, Query, QueryResult};

    fn corpus(docs: Vec<String>) -> Corpus {
        let cs = docs
            .into_iter()
            .enumerate()
            .map(|(i, d)| Citation::new(format!("{i}"), d, "", None))
            .collect();
        Corpus::new("toy", cs).unwrap()
    }

    fn cos(t: &EmbeddingTable, a: &str, b: &str) -> f64 {
        match similarity_query(t, &Query::Cosine(a.into(), b.into())).unwrap() {
            QueryResult::Cosine(c) => c,
            _ => unreachable!(),
        }
    }

    #[test]
    fn default_hyperparameters() {
        let c = SkipGramConfig::default();
        assert_eq!((c.window, c.min_count, c.negative, c.epochs), (5, 15, 5, 5));
        assert_eq!(c.learning_rate, 0.025);
    }

    #[test]
    fn cooccurring_words_end_up_closer() {
        let mut docs = Vec::new();
        for i in 0..200 {
            docs.push("x y x y x y x y".to_string());
            docs.push(if i % 2 == 0 { "z w z w z w".into() } else { "w z w z w z".into() });
        }
        let cfg = SkipGramConfig {
            dim: 16,
            min_count: 5,
            sample: 0.0,
            ..SkipGramConfig::default()
        };
        let t = train_skipgram(&[&corpus(docs)], &cfg).unwrap();
        assert!(cos(&t, "x", "y") > cos(&t, "x", "z"));
        assert!(cos(&t, "z", "w") > cos(&t, "y", "w"));
    }

    #[test]
    fn deterministic_under_seed() {
        let docs: Vec<String> = (0..50).map(|i| format!("a b c d {} e f", i % 3)).collect();
        let c = corpus(docs);
        let cfg = SkipGramConfig { dim: 8, min_count: 2, ..Default::default() };
        let a = train_skipgram(&[&c], &cfg).unwrap();
        let b = train_skipgram(&[&c], &cfg).unwrap();
        assert_eq!(a, b);
        let other = train_skipgram(&[&c], &SkipGramConfig { seed: 2, ..cfg }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn min_count_filters_and_errors() {
        let small = corpus(vec!["one two three four five six seven eight nine ten".into()]);
        assert!(train_skipgram(&[&small], &SkipGramConfig::default()).is_err());
        let c = corpus((0..20).map(|_| "common rare".to_string()).chain(["unique common".to_string()]).collect());
        let t = train_skipgram(&[&c], &SkipGramConfig { dim: 4, min_count: 15, ..Default::default() }).unwrap();
        assert!(t.contains("common") && t.contains("rare") && !t.contains("unique"));
        assert!(train_skipgram(&[&c], &SkipGramConfig { dim: 1, ..Default::default() }).is_err());
    }
}
