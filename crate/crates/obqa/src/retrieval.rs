//! Retrievers behind one trait: the built-in BM25 index, a remote search
//! service, and an oracle that forces the gold document to rank 1.

use std::collections::HashMap;
use std::time::Duration;

use obqa_core::retriever::{RankedEntry, RetrieverError};
use obqa_core::{InvertedIndex, QaExample, RankedList};
use serde::{Deserialize, Serialize};

pub trait Retriever: Send + Sync {
    fn retrieve(&self, query: &str, k: usize) -> Result<RankedList, RetrieveError>;
    fn name(&self) -> &str;
}

#[derive(Debug, thiserror::Error)]
pub enum RetrieveError {
    #[error("index: {0}")]
    Index(#[from] RetrieverError),
    #[error("remote retriever: {0}")]
    Transport(#[from] TransportError),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransportError {
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("server answered with HTTP status {0}")]
    Status(u16),
    #[error("connection failed: {0}")]
    Connection(String),
    #[error("malformed response: {0}")]
    Malformed(String),
}

pub struct BuiltinRetriever {
    index: InvertedIndex,
}

impl BuiltinRetriever {
    pub fn new(index: InvertedIndex) -> Self {
        BuiltinRetriever { index }
    }

    pub fn index(&self) -> &InvertedIndex {
        &self.index
    }
}

impl Retriever for BuiltinRetriever {
    fn retrieve(&self, query: &str, k: usize) -> Result<RankedList, RetrieveError> {
        Ok(self.index.retrieve(query, k)?)
    }

    fn name(&self) -> &str {
        "builtin-bm25"
    }
}

#[derive(Serialize)]
struct RemoteRequest<'a> {
    query: &'a str,
    k: usize,
}

#[derive(Deserialize)]
struct RemoteResponse {
    results: Vec<RemoteHit>,
}

#[derive(Deserialize)]
struct RemoteHit {
    doc_id: String,
    score: f64,
}

/// Client for a search service speaking
/// `POST {"query", "k"}` → `{"results": [{"doc_id", "score"}]}`.
pub struct RemoteRetriever {
    endpoint: String,
    timeout: Duration,
    agent: ureq::Agent,
}

impl RemoteRetriever {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let agent =
            ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into();
        RemoteRetriever { endpoint: endpoint.into(), timeout, agent }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn transport(&self, e: ureq::Error) -> TransportError {
        match e {
            ureq::Error::Timeout(_) => TransportError::Timeout(self.timeout),
            ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => TransportError::Timeout(self.timeout),
            ureq::Error::StatusCode(code) => TransportError::Status(code),
            other => TransportError::Connection(other.to_string()),
        }
    }

    pub fn request(&self, query: &str, k: usize) -> Result<RankedList, TransportError> {
        let mut resp =
            self.agent.post(&self.endpoint).send_json(RemoteRequest { query, k }).map_err(|e| self.transport(e))?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(TransportError::Status(status));
        }
        let body = resp.body_mut().read_to_string().map_err(|e| self.transport(e))?;
        let parsed: RemoteResponse =
            serde_json::from_str(&body).map_err(|e| TransportError::Malformed(e.to_string()))?;
        if let Some(bad) = parsed.results.iter().find(|h| !h.score.is_finite()) {
            return Err(TransportError::Malformed(format!("non-finite score for {}", bad.doc_id)));
        }
        let entries = parsed.results.into_iter().map(|h| RankedEntry { doc_id: h.doc_id, score: h.score }).collect();
        Ok(RankedList::from_unsorted(query, entries, k))
    }
}

impl Retriever for RemoteRetriever {
    fn retrieve(&self, query: &str, k: usize) -> Result<RankedList, RetrieveError> {
        Ok(self.request(query, k)?)
    }

    fn name(&self) -> &str {
        "remote"
    }
}

/// Puts the gold document of a known question at rank 1, above whatever the
/// inner retriever returns; unknown questions pass through unchanged.
pub struct OracleRetriever<R> {
    inner: R,
    gold: HashMap<String, String>,
}

impl<R: Retriever> OracleRetriever<R> {
    pub fn new(inner: R, dataset: &[QaExample]) -> Self {
        let gold =
            dataset.iter().filter_map(|q| q.gold_doc_id().map(|d| (q.question.clone(), d.to_string()))).collect();
        OracleRetriever { inner, gold }
    }
}

impl<R: Retriever> Retriever for OracleRetriever<R> {
    fn retrieve(&self, query: &str, k: usize) -> Result<RankedList, RetrieveError> {
        let mut list = self.inner.retrieve(query, k)?;
        if let Some(gold) = self.gold.get(query) {
            let top = list.entries.first().map_or(0.0, |e| e.score);
            list.entries.retain(|e| &e.doc_id != gold);
            list.entries.insert(0, RankedEntry { doc_id: gold.clone(), score: top + 1.0 });
            list.entries.truncate(k);
        }
        Ok(list)
    }

    fn name(&self) -> &str {
        "oracle"
    }
}
