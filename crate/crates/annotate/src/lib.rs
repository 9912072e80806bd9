//! Annotation service: hands ranked candidates to annotators over HTTP,
//! records helpful / not-helpful votes in an append-only log, and exports
//! the curated pairs.

pub mod http;
pub mod store;

pub use http::{router, serve, SharedStore};
pub use store::{AnnotationStore, Batch, BatchItem, Candidate, Progress, StoreError, VoteEvent, VoteOutcome};
