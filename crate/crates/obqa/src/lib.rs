//! Std companion to `obqa-core`: directory ingestion, artifact files, dataset
//! loaders, retriever backends, the answering pipeline, evaluation, and the
//! `obqa` command line.

pub mod artifacts;
pub mod eval;
pub mod ingest;
pub mod pipeline;
pub mod qa_eval;
pub mod retrieval;
pub mod squad;
pub mod synth_io;
pub mod training;

pub use obqa_core as core;
