//! Graph-guided claim verification.
//!
//! A claim is turned into a graph of triplets over named entities and
//! placeholders, evidence into a graph over named entities, and the claim is
//! checked triplet by triplet in [`planner`] order, filling placeholders from
//! the evidence as it goes. See [`pipeline::Verifier`].

pub mod agents;
pub mod config;
pub mod evaluation;
pub mod graph;
pub mod pipeline;
pub mod planner;
pub mod retrieval;
pub mod scalar;
pub mod symbolic;

pub use agents::{Backend, ModelBackend, SymbolicBackend};
pub use graph::{ClaimGraph, EntityRef, EvidenceGraph, Placeholder, Triplet};
pub use pipeline::{Label, PipelineConfig, VerificationReport, Verifier};
pub use planner::{Plan, TieBreak};
pub use scalar::{Real, Scalar};

/// BM25 index over `f64` scores.
pub type Index = retrieval::Index<f64>;
pub type Bm25Params = retrieval::Bm25Params<f64>;
/// Floating-point metrics, as reported.
pub type Metrics = evaluation::Metrics<f64>;
/// Exact rational metrics, for checking fixed examples.
pub type ExactMetrics = evaluation::Metrics<num_rational::Ratio<i64>>;
