//! Automated abstract screening for systematic reviews.
//!
//! The crate covers the whole pipeline from raw citations to ranked output:
//!
//! - [`corpus`]: citation records, ingestion, prevalence groups and stratified folds.
//! - [`features`]: tokenization, uni/bi-gram counts, skip-gram embeddings and
//!   embedding-averaged citation vectors.
//! - [`svm`]: linear max-margin training (weighted hinge, transductive, and
//!   structural training against AUC / KLD / QuadMean losses).
//! - [`relrank`]: the three-member star-rating ensemble.
//! - [`metrics`]: threshold, ranking and screening-workload metrics.
//! - [`stats`]: cross-validated experiment grids and equivalence grouping of methods.
//! - [`active`]: certainty-sampling active-learning simulation.
//! - [`report`]: CSV / SVG emitters shared by the command-line tool.
//! - [`synth`]: seeded synthetic corpora for tests and demos.

pub mod active;
pub mod corpus;
pub mod error;
pub mod features;
pub mod methods;
pub mod metrics;
pub mod relrank;
pub mod rng;
pub mod report;
pub mod stats;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};
