//! Directory ingestion.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use obqa_core::corpus::CorpusError;
use obqa_core::{CorpusStore, Document};
use rayon::prelude::*;
use serde::Serialize;
use walkdir::WalkDir;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read corpus root {path}: {source}")]
    UnreadableRoot { path: PathBuf, source: io::Error },
    #[error("corpus root {0} is not a directory")]
    NotADirectory(PathBuf),
    #[error("corpus: {0}")]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    NotUtf8,
    Empty,
    Unreadable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: SkipReason,
}

#[derive(Debug)]
pub struct IngestReport {
    pub corpus: CorpusStore,
    pub skipped: Vec<SkippedFile>,
}

/// `a/b/c.txt`, independent of the platform separator.
fn doc_id_for(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}

/// Reads every regular file under `root`. Files that are empty, not UTF-8,
/// or unreadable are skipped and listed in the report (and logged).
pub fn ingest_corpus(root: &Path) -> Result<IngestReport, IngestError> {
    let meta = fs::metadata(root).map_err(|source| IngestError::UnreadableRoot { path: root.into(), source })?;
    if !meta.is_dir() {
        return Err(IngestError::NotADirectory(root.into()));
    }
    fs::read_dir(root).map_err(|source| IngestError::UnreadableRoot { path: root.into(), source })?;

    let mut skipped = Vec::new();
    let mut files = Vec::new();
    for entry in WalkDir::new(root).follow_links(false).sort_by_file_name() {
        match entry {
            Ok(e) if e.file_type().is_file() => files.push(e.into_path()),
            Ok(_) => {}
            Err(err) => {
                let path = err.path().map(Path::to_path_buf).unwrap_or_else(|| root.into());
                skipped.push(SkippedFile { path, reason: SkipReason::Unreadable(err.to_string()) });
            }
        }
    }

    let read: Vec<Result<Document, SkippedFile>> = files
        .par_iter()
        .map(|path| {
            let skip = |reason| SkippedFile { path: path.clone(), reason };
            let bytes = fs::read(path).map_err(|e| skip(SkipReason::Unreadable(e.to_string())))?;
            let text = String::from_utf8(bytes).map_err(|_| skip(SkipReason::NotUtf8))?;
            if text.is_empty() {
                return Err(skip(SkipReason::Empty));
            }
            Ok(Document::new(doc_id_for(root, path), text))
        })
        .collect();

    let mut docs = Vec::with_capacity(read.len());
    for r in read {
        match r {
            Ok(d) => docs.push(d),
            Err(s) => skipped.push(s),
        }
    }
    for s in &skipped {
        log::warn!("skipped {}: {:?}", s.path.display(), s.reason);
    }
    Ok(IngestReport { corpus: CorpusStore::new(docs)?, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_ids_and_skips() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.txt"), "cat").unwrap();
        fs::create_dir(dir.path().join("sub")).unwrap();
        fs::write(dir.path().join("sub/b.txt"), "dog").unwrap();
        fs::write(dir.path().join("bad.bin"), [0xff, 0xfe, 0x00]).unwrap();
        fs::write(dir.path().join("empty.txt"), "").unwrap();
        let r = ingest_corpus(dir.path()).unwrap();
        let ids: Vec<&str> = r.corpus.iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(ids, ["a.txt", "sub/b.txt"]);
        let reasons: Vec<_> = r.skipped.iter().map(|s| s.reason.clone()).collect();
        assert_eq!(reasons, [SkipReason::NotUtf8, SkipReason::Empty]);
    }

    #[test]
    fn empty_and_missing_roots() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(ingest_corpus(dir.path()).unwrap().corpus.len(), 0);
        assert!(matches!(ingest_corpus(&dir.path().join("nope")), Err(IngestError::UnreadableRoot { .. })));
        let f = dir.path().join("f.txt");
        fs::write(&f, "x").unwrap();
        assert!(matches!(ingest_corpus(&f), Err(IngestError::NotADirectory(_))));
    }
}
