//! Synthetic data: dense labeled point clouds and review-shaped text corpora.

use rand::distributions::WeightedIndex;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::corpus::{Citation, Corpus, Label};
use crate::features::{DenseMatrix, FeatureMatrix};
use crate::rng;

fn labels_for(n: usize, n_relevant: usize, r: &mut rng::Rng) -> Vec<Label> {
    let mut labels: Vec<Label> = (0..n)
        .map(|i| if i < n_relevant { Label::Relevant } else { Label::Irrelevant })
        .collect();
    labels.shuffle(r);
    labels
}

/// Points whose first coordinate is `y·(margin + |e|)`; the rest are standard normal.
/// Every weight vector along the first axis separates the classes with margin `margin`.
pub fn separable_dense(n: usize, n_relevant: usize, dim: usize, margin: f64, seed: u64) -> (FeatureMatrix, Vec<Label>) {
    let mut r = rng::seeded(seed);
    let labels = labels_for(n, n_relevant, &mut r);
    let mut data = Vec::with_capacity(n * dim);
    for l in &labels {
        let e: f64 = StandardNormal.sample(&mut r);
        data.push(l.sign() * (margin + 0.5 * e.abs()));
        for _ in 1..dim {
            data.push(StandardNormal.sample(&mut r));
        }
    }
    (FeatureMatrix::Dense(DenseMatrix::new(n, dim, data)), labels)
}

/// Two unit-variance Gaussian classes whose means are `separation` apart along the first axis.
pub fn gaussian_dense(n: usize, n_relevant: usize, dim: usize, separation: f64, seed: u64) -> (FeatureMatrix, Vec<Label>) {
    let mut r = rng::seeded(seed);
    let labels = labels_for(n, n_relevant, &mut r);
    let mut data = Vec::with_capacity(n * dim);
    for l in &labels {
        for j in 0..dim {
            let e: f64 = StandardNormal.sample(&mut r);
            data.push(if j == 0 { e + l.sign() * separation / 2.0 } else { e });
        }
    }
    (FeatureMatrix::Dense(DenseMatrix::new(n, dim, data)), labels)
}

/// Name, size and relevant count of the fifteen public drug-class reviews.
pub const COHEN_REVIEWS: [(&str, usize, usize); 15] = [
    ("C12", 1643, 9),
    ("C9", 1914, 15),
    ("C1", 2544, 41),
    ("C5", 1965, 42),
    ("C2", 845, 20),
    ("C13", 3377, 85),
    ("C14", 660, 24),
    ("C11", 1330, 51),
    ("C3", 296, 16),
    ("C6", 1113, 100),
    ("C8", 343, 41),
    ("C15", 306, 40),
    ("C4", 899, 146),
    ("C7", 368, 80),
    ("C10", 503, 136),
];

const SYLLABLES: [&str; 20] = [
    "ba", "ce", "di", "fo", "gu", "ha", "je", "ki", "lo", "mu", "na", "pe", "ri", "so", "tu", "va", "we", "xi", "yo", "za",
];

/// A pronounceable pseudo-word, unique per index.
pub fn pseudo_word(mut index: usize) -> String {
    let mut w = String::new();
    loop {
        w.push_str(SYLLABLES[index % SYLLABLES.len()]);
        index /= SYLLABLES.len();
        if index == 0 {
            break;
        }
        index -= 1;
    }
    if w.len() < 4 {
        w.push('n');
    }
    w
}

/// Parameters of the review-shaped text generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextModel {
    pub background_words: usize,
    pub topic_words: usize,
    pub criteria_words: usize,
    pub title_len: (usize, usize),
    pub abstract_len: (usize, usize),
    /// Per-token probabilities of drawing from the topic and criteria vocabularies.
    pub relevant_rates: (f64, f64),
    pub irrelevant_rates: (f64, f64),
}

impl Default for TextModel {
    fn default() -> Self {
        TextModel {
            background_words: 4000,
            topic_words: 60,
            criteria_words: 30,
            title_len: (8, 15),
            abstract_len: (80, 160),
            relevant_rates: (0.20, 0.10),
            irrelevant_rates: (0.08, 0.02),
        }
    }
}

/// A corpus of `total` citations, `relevant` of them relevant.
///
/// All citations mix Zipf-distributed background words with words from a
/// review-specific topic vocabulary; relevant ones use topic and criteria
/// words more often. `review` selects disjoint topic/criteria vocabularies.
pub fn review_corpus(name: &str, total: usize, relevant: usize, review: usize, model: &TextModel, seed: u64) -> Corpus {
    let mut r = rng::seeded(seed);
    let labels = labels_for(total, relevant, &mut r);
    let zipf = WeightedIndex::new((1..=model.background_words).map(|k| 1.0 / k as f64)).expect("positive weights");
    let per_review = model.topic_words + model.criteria_words;
    let offset = model.background_words + review * per_review;
    let topic: Vec<String> = (0..model.topic_words).map(|k| pseudo_word(offset + k)).collect();
    let criteria: Vec<String> = (0..model.criteria_words)
        .map(|k| pseudo_word(offset + model.topic_words + k))
        .collect();
    let background: Vec<String> = (0..model.background_words).map(pseudo_word).collect();

    let text = |len: usize, rates: (f64, f64), r: &mut rng::Rng| -> String {
        let words: Vec<&str> = (0..len)
            .map(|_| {
                let u: f64 = r.gen();
                if u < rates.0 {
                    topic[r.gen_range(0..topic.len())].as_str()
                } else if u < rates.0 + rates.1 {
                    criteria[r.gen_range(0..criteria.len())].as_str()
                } else {
                    background[zipf.sample(r)].as_str()
                }
            })
            .collect();
        words.join(" ")
    };
    let citations = labels
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            let rates = if label.is_relevant() { model.relevant_rates } else { model.irrelevant_rates };
            let tl = r.gen_range(model.title_len.0..=model.title_len.1);
            let al = r.gen_range(model.abstract_len.0..=model.abstract_len.1);
            let title = text(tl, rates, &mut r);
            let abstract_text = text(al, rates, &mut r);
            Citation::new(format!("{name}-{i:05}"), title, abstract_text, Some(label))
        })
        .collect();
    Corpus::new(name, citations).expect("generated ids are unique")
}

/// Review-shaped stand-ins for the public reviews, with their sizes and relevant counts.
pub fn cohen_proxies(seed: u64) -> Vec<Corpus> {
    COHEN_REVIEWS
        .iter()
        .enumerate()
        .map(|(i, &(name, total, rel))| {
            review_corpus(name, total, rel, i, &TextModel::default(), rng::derive_seed(seed, i as u64))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::prevalence;

    #[test]
    fn pseudo_words_unique() {
        let mut w: Vec<String> = (0..10_000).map(pseudo_word).collect();
        w.sort();
        w.dedup();
        assert_eq!(w.len(), 10_000);
    }

    #[test]
    fn separable_has_margin() {
        let (x, y) = separable_dense(300, 15, 5, 1.0, 4);
        assert_eq!(y.iter().filter(|l| l.is_relevant()).count(), 15);
        let w = [1.0, 0.0, 0.0, 0.0, 0.0];
        for (i, l) in y.iter().enumerate() {
            assert!(l.sign() * x.dot(i, &w) >= 1.0);
        }
    }

    #[test]
    fn review_corpus_shape() {
        let c = review_corpus("T", 200, 12, 0, &TextModel::default(), 9);
        assert_eq!(c.len(), 200);
        assert_eq!(c.relevant_count(), 12);
        let (p, _) = prevalence(&c).unwrap();
        assert!((p - 0.06).abs() < 1e-12);
        let again = review_corpus("T", 200, 12, 0, &TextModel::default(), 9);
        assert_eq!(c.citations(), again.citations());
    }

    #[test]
    fn proxy_prevalence_matches_review_sizes() {
        let expected_pct = [
            0.55, 0.78, 1.61, 2.14, 2.37, 2.52, 3.64, 3.83, 5.41, 8.98, 11.95, 13.07, 16.24, 21.74, 27.03,
        ];
        for (&(_, total, rel), p) in COHEN_REVIEWS.iter().zip(expected_pct) {
            let pct = 100.0 * rel as f64 / total as f64;
            assert!((pct - p).abs() < 0.01, "{pct} vs {p}");
        }
    }
}
