//! Topic-based cross-reference candidate generation.
//!
//! The pipeline turns a passage-segmented corpus into ranked candidate
//! cross-references:
//!
//! 1. [`corpus`]: parse, tokenize, build the vocabulary and document-term counts.
//! 2. [`cooccurrence`]: word co-occurrence matrix Q and its row-normalized form.
//! 3. [`anchors`]: Gram-Schmidt anchor words or passage-seeded tandem anchors.
//! 4. [`topics`]: recover the topic-word matrix by simplex-constrained least squares.
//! 5. [`inference`]: per-passage topic proportions by mean-field updates.
//! 6. [`candidates`]: all-pairs topic-vector distances and concordance baselines.
//! 7. [`evaluation`]: ground-truth loading, ROC/PR/cost curves.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the precision used by the command-line pipeline.

pub mod anchors;
pub mod candidates;
pub mod artifact;
pub mod cooccurrence;
pub mod corpus;
pub mod evaluation;
pub mod inference;
mod error;
mod matrix;
pub mod scalar;
pub mod synthetic;
pub mod topics;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use scalar::Scalar;

pub type Cooccurrence = cooccurrence::CooccurrenceMatrix<f64>;
pub type AnchorSet = anchors::AnchorSet<f64>;
pub type TopicModel = topics::TopicModel<f64>;
pub type DocTopicVector = inference::DocTopicVector<f64>;
pub type SparseTopicVector = inference::SparseTopicVector<f64>;
pub type CandidateSet = candidates::CandidateSet<f64>;
