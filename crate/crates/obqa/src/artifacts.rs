//! Index and checkpoint files, plus parallel index construction.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use obqa_core::extractor::DecodeCheckpointError;
use obqa_core::retriever::{DecodeIndexError, DocTerms, RetrieverError};
use obqa_core::{Bm25Params, CorpusStore, InvertedIndex, ModelParams};
use rayon::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Index { path: PathBuf, source: DecodeIndexError },
    #[error("{path}: {source}")]
    Checkpoint { path: PathBuf, source: DecodeCheckpointError },
}

fn read(path: &Path) -> Result<Vec<u8>, ArtifactError> {
    fs::read(path).map_err(|source| ArtifactError::Io { path: path.into(), source })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), ArtifactError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| ArtifactError::Io { path: parent.into(), source })?;
    }
    fs::write(path, bytes).map_err(|source| ArtifactError::Io { path: path.into(), source })
}

/// Tokenizes documents in parallel, then merges into one index.
pub fn build_index_parallel(corpus: &CorpusStore, params: Bm25Params) -> Result<InvertedIndex, RetrieverError> {
    let terms: Vec<DocTerms> = corpus.documents().par_iter().map(DocTerms::from_document).collect();
    InvertedIndex::from_doc_terms(terms, params)
}

pub fn save_index(path: &Path, index: &InvertedIndex) -> Result<(), ArtifactError> {
    write(path, &index.to_bytes())
}

pub fn load_index(path: &Path) -> Result<InvertedIndex, ArtifactError> {
    InvertedIndex::from_bytes(&read(path)?).map_err(|source| ArtifactError::Index { path: path.into(), source })
}

pub fn save_checkpoint(path: &Path, params: &ModelParams) -> Result<(), ArtifactError> {
    write(path, &params.to_bytes())
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams, ArtifactError> {
    ModelParams::from_bytes(&read(path)?).map_err(|source| ArtifactError::Checkpoint { path: path.into(), source })
}
