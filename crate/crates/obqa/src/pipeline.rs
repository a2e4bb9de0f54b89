//! Retriever → extractor → decoder, per question.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use obqa_core::reader::{read_document, ReadError};
use obqa_core::retriever::lexical_fallback;
use obqa_core::{
    select_answer, tokenize, Bm25Params, CorpusStore, DecodeConfig, DocumentAnswer, FinalAnswer, ModelParams,
    RankedList, WindowConfig,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{build_index_parallel, load_checkpoint, load_index, ArtifactError};
use crate::ingest::{ingest_corpus, IngestError};
use crate::retrieval::{BuiltinRetriever, RemoteRetriever, RetrieveError, Retriever};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RetrieverConfig {
    Builtin,
    Remote {
        endpoint: String,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
        /// Use the built-in index when the service fails.
        #[serde(default)]
        fallback_to_builtin: bool,
    },
}

fn default_timeout_ms() -> u64 {
    5000
}

fn default_top_k() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus_root: PathBuf,
    /// Prebuilt index; built from the corpus when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<PathBuf>,
    pub checkpoint: PathBuf,
    #[serde(default = "default_retriever")]
    pub retriever: RetrieverConfig,
    #[serde(default = "default_top_k")]
    pub top_k_docs: usize,
    #[serde(default)]
    pub windowing: WindowConfig,
    #[serde(default)]
    pub decode: DecodeConfig,
    /// Recorded in reports; inference is deterministic.
    #[serde(default)]
    pub seed: u64,
}

fn default_retriever() -> RetrieverConfig {
    RetrieverConfig::Builtin
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error(transparent)]
    Retrieve(#[from] RetrieveError),
    #[error("reading {doc_id}: {source}")]
    Read { doc_id: String, source: ReadError },
    #[error("no document yielded an answer")]
    NoAnswer,
}

impl PipelineError {
    /// Configuration problems versus problems with the data being processed.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            PipelineError::Config(_)
                | PipelineError::Artifact(ArtifactError::Io { .. })
                | PipelineError::Ingest(IngestError::UnreadableRoot { .. } | IngestError::NotADirectory(_))
        )
    }
}

impl PipelineConfig {
    pub fn new(corpus_root: impl Into<PathBuf>, checkpoint: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            corpus_root: corpus_root.into(),
            index: None,
            checkpoint: checkpoint.into(),
            retriever: RetrieverConfig::Builtin,
            top_k_docs: default_top_k(),
            windowing: WindowConfig::default(),
            decode: DecodeConfig::default(),
            seed: 0,
        }
    }

    /// Reads a JSON config; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.corpus_root);
        resolve(&mut cfg.checkpoint);
        if let Some(i) = cfg.index.as_mut() {
            resolve(i);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.top_k_docs == 0 {
            return bad("top_k_docs must be at least 1".into());
        }
        let t = self.decode.threshold;
        if !(t > 0.0 && t < 1.0) {
            return bad(format!("decode.threshold must lie strictly between 0 and 1 (got {t})"));
        }
        if self.decode.max_span_len == 0 {
            return bad("decode.max_span_len must be at least 1".into());
        }
        self.windowing.validate().map_err(|e| PipelineError::Config(e.to_string()))
    }
}

/// A retrieved (or fallback) document and what the extractor made of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    pub doc_id: String,
    /// None for the lexical fallback document.
    pub retrieval_score: Option<f64>,
    /// None when the document is missing from the corpus or has no tokens.
    pub confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerOutput {
    pub question: String,
    pub answer: FinalAnswer,
    pub provenance: Vec<ProvenanceEntry>,
    /// Retrieval returned nothing usable; the lexically closest document was read.
    pub lexical_fallback: bool,
    /// The configured retriever failed and the built-in index answered.
    pub retriever_fallback: bool,
}

pub struct Pipeline {
    config: PipelineConfig,
    corpus: CorpusStore,
    retriever: Box<dyn Retriever>,
    fallback: Option<Box<dyn Retriever>>,
    params: ModelParams,
}

impl Pipeline {
    pub fn new(
        config: PipelineConfig,
        corpus: CorpusStore,
        retriever: Box<dyn Retriever>,
        fallback: Option<Box<dyn Retriever>>,
        params: ModelParams,
    ) -> Result<Self, PipelineError> {
        config.validate()?;
        let max = params.config().max_window_len;
        if config.windowing.max_window_len > max {
            return Err(PipelineError::Config(format!(
                "windowing.max_window_len {} exceeds the checkpoint's limit of {max}",
                config.windowing.max_window_len
            )));
        }
        Ok(Pipeline { config, corpus, retriever, fallback, params })
    }

    /// Loads the corpus, index (or builds it), and checkpoint named by `config`.
    pub fn from_config(config: PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        if !config.checkpoint.is_file() {
            return Err(PipelineError::Config(format!("checkpoint {} does not exist", config.checkpoint.display())));
        }
        let ingest = ingest_corpus(&config.corpus_root)?;
        let builtin = || -> Result<Box<dyn Retriever>, PipelineError> {
            let index = match &config.index {
                Some(p) => load_index(p)?,
                None => build_index_parallel(&ingest.corpus, Bm25Params::default())
                    .map_err(|e| PipelineError::Retrieve(e.into()))?,
            };
            Ok(Box::new(BuiltinRetriever::new(index)))
        };
        let (retriever, fallback): (Box<dyn Retriever>, _) = match &config.retriever {
            RetrieverConfig::Builtin => (builtin()?, None),
            RetrieverConfig::Remote { endpoint, timeout_ms, fallback_to_builtin } => {
                let remote = Box::new(RemoteRetriever::new(endpoint.clone(), Duration::from_millis(*timeout_ms)));
                let fb = if *fallback_to_builtin { Some(builtin()?) } else { None };
                (remote, fb)
            }
        };
        let params = load_checkpoint(&config.checkpoint)?;
        Pipeline::new(config, ingest.corpus, retriever, fallback, params)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn corpus(&self) -> &CorpusStore {
        &self.corpus
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn retriever(&self) -> &dyn Retriever {
        self.retriever.as_ref()
    }

    /// Ranked documents, falling back to the built-in index on transport errors.
    pub fn retrieve(&self, question: &str) -> Result<(RankedList, bool), PipelineError> {
        match self.retriever.retrieve(question, self.config.top_k_docs) {
            Ok(r) => Ok((r, false)),
            Err(RetrieveError::Transport(e)) if self.fallback.is_some() => {
                log::warn!("retriever failed ({e}); using the built-in index");
                let fb = self.fallback.as_ref().expect("checked");
                Ok((fb.retrieve(question, self.config.top_k_docs)?, true))
            }
            Err(e) => Err(e.into()),
        }
    }

    fn read(&self, question: &[obqa_core::Token], doc_id: &str) -> Result<Option<DocumentAnswer>, PipelineError> {
        let Some(doc) = self.corpus.get(doc_id) else {
            log::warn!("retrieved document {doc_id} is not in the corpus");
            return Ok(None);
        };
        read_document(&self.params, question, doc, &self.config.windowing, &self.config.decode)
            .map_err(|source| PipelineError::Read { doc_id: doc_id.to_string(), source })
    }

    pub fn answer(&self, question: &str) -> Result<AnswerOutput, PipelineError> {
        let (ranked, retriever_fallback) = self.retrieve(question)?;
        let q = tokenize(question);
        let read: Vec<Option<DocumentAnswer>> =
            ranked.entries.par_iter().map(|e| self.read(&q, &e.doc_id)).collect::<Result<_, _>>()?;
        let mut provenance: Vec<ProvenanceEntry> = ranked
            .entries
            .iter()
            .zip(&read)
            .map(|(e, r)| ProvenanceEntry {
                doc_id: e.doc_id.clone(),
                retrieval_score: Some(e.score),
                confidence: r.as_ref().map(|d| d.confidence),
            })
            .collect();
        let mut docs: Vec<DocumentAnswer> = read.into_iter().flatten().collect();
        let mut lexical = false;
        if docs.is_empty() {
            lexical = true;
            if let Some(doc) = lexical_fallback(&self.corpus, question) {
                let answer = self.read(&q, &doc.doc_id)?;
                provenance.push(ProvenanceEntry {
                    doc_id: doc.doc_id.clone(),
                    retrieval_score: None,
                    confidence: answer.as_ref().map(|d| d.confidence),
                });
                docs.extend(answer);
            }
        }
        let answer = select_answer(&docs, &self.config.decode.join_separator).map_err(|_| PipelineError::NoAnswer)?;
        Ok(AnswerOutput {
            question: question.to_string(),
            answer,
            provenance,
            lexical_fallback: lexical,
            retriever_fallback,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_json_round_trip_and_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pipeline.json");
        fs::write(&p, r#"{"corpus_root":"corpus","checkpoint":"model.ckpt"}"#).unwrap();
        let cfg = PipelineConfig::load(&p).unwrap();
        assert_eq!(cfg.corpus_root, dir.path().join("corpus"));
        assert_eq!(cfg.top_k_docs, 5);
        assert_eq!(cfg.retriever, RetrieverConfig::Builtin);
        assert_eq!(cfg.decode, DecodeConfig::default());
        let back: PipelineConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn invalid_configs() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        for body in [
            r#"{"corpus_root":"c","checkpoint":"m","top_k_docs":0}"#,
            r#"{"corpus_root":"c","checkpoint":"m","decode":{"threshold":1.0,"max_span_len":30,"join_separator":" "}}"#,
            r#"{"corpus_root":"c","checkpoint":"m","windowing":{"max_window_len":4,"stride":5}}"#,
            r#"{"corpus_root":"c","checkpoint":"m","bogus":1}"#,
            r#"{"corpus_root":"c"}"#,
        ] {
            fs::write(&p, body).unwrap();
            assert!(matches!(PipelineConfig::load(&p), Err(PipelineError::Config(_))), "{body}");
        }
        let remote: PipelineConfig = serde_json::from_str(
            r#"{"corpus_root":"c","checkpoint":"m","retriever":{"kind":"remote","endpoint":"http://x/search"}}"#,
        )
        .unwrap();
        assert_eq!(
            remote.retriever,
            RetrieverConfig::Remote {
                endpoint: "http://x/search".into(),
                timeout_ms: 5000,
                fallback_to_builtin: false
            }
        );
    }

    #[test]
    fn missing_checkpoint_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig::new(dir.path(), dir.path().join("none.ckpt"));
        let err = Pipeline::from_config(cfg).err().unwrap();
        assert!(err.is_config(), "{err}");
    }
}
