//! Core algorithms for zero-shot open-book question answering.
//!
//! A question is answered in two steps: a lexical retriever ranks corpus
//! documents, then an extractor reads the top documents window by window and
//! emits start/end probabilities per token plus a yes/no/none verdict. The
//! decoder turns those probabilities into text spans and a final answer.
//!
//! This crate is `no_std` and only needs `alloc`. File formats, directory
//! ingestion, HTTP, and the command line live in the `obqa` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod bytes;
pub mod corpus;
pub mod datasets;
pub mod decoder;
pub mod extractor;
pub mod hash;
pub mod metrics;
pub mod reader;
pub mod retriever;
pub mod synth;

pub use corpus::{tokenize, window_document, CorpusStore, Document, Token, Window, WindowConfig};
pub use datasets::{make_training_windows, GoldSource, LabeledWindow, QaExample, Ynn};
pub use decoder::{
    decode_document, decode_window, select_answer, DecodeConfig, DocumentAnswer, FinalAnswer, SpanCandidate,
};
pub use extractor::{AnswerLabel, EncoderConfig, HeadLogits, ModelParams};
pub use metrics::{exact_match, normalize_answer, token_f1, ynn_accuracy, ScoreReport};
pub use retriever::{Bm25Params, InvertedIndex, RankedList};
