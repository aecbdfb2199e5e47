//! Text featurization: tokenization, uni/bi-gram counts, skip-gram word
//! embeddings and embedding-averaged citation vectors.

mod dense;
mod embedding;
mod matrix;
mod skipgram;
mod tokenize;
mod unibigram;

pub use dense::{normalize, round2, DenseMatrix, Normalization};
pub use embedding::{
    embed_citation, embed_corpus, similarity_query, EmbeddedCitation, EmbeddingTable, Query,
    QueryResult,
};
pub use matrix::{FeatureMatrix, SparseMatrix};
pub use skipgram::{train_skipgram, SkipGramConfig};
pub use tokenize::{citation_segments, citation_tokens, tokenize};
pub use unibigram::{
    build_unibigram_vocab, term_counts, vectorize_corpus, vectorize_unibigram, SparseVector,
    Vocabulary,
};
