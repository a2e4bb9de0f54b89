//! Documents, tokenization with byte offsets, and sliding-window segmentation.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// A single corpus document. `doc_id` is the path relative to the corpus root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        Document { doc_id: doc_id.into(), text: text.into() }
    }

    pub fn byte_len(&self) -> usize {
        self.text.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusError {
    DuplicateId(String),
    EmptyText(String),
}

impl fmt::Display for CorpusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusError::DuplicateId(id) => write!(f, "duplicate document id `{id}`"),
            CorpusError::EmptyText(id) => write!(f, "document `{id}` has empty text"),
        }
    }
}

impl core::error::Error for CorpusError {}

/// Immutable set of documents ordered by `doc_id`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStore {
    docs: Vec<Document>,
}

impl CorpusStore {
    pub fn new(mut docs: Vec<Document>) -> Result<Self, CorpusError> {
        docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        for pair in docs.windows(2) {
            if pair[0].doc_id == pair[1].doc_id {
                return Err(CorpusError::DuplicateId(pair[0].doc_id.clone()));
            }
        }
        if let Some(d) = docs.iter().find(|d| d.text.is_empty()) {
            return Err(CorpusError::EmptyText(d.doc_id.clone()));
        }
        Ok(CorpusStore { docs })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.docs.binary_search_by(|d| d.doc_id.as_str().cmp(doc_id)).ok().map(|i| &self.docs[i])
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Document> {
        self.docs.iter()
    }
}

/// One token: the case-folded surface plus the byte range it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub start: usize,
    pub end: usize,
}

/// Splits `text` into maximal runs of alphanumeric characters, lowercased.
///
/// Offsets are byte offsets into `text`, so `&text[t.start..t.end]` is the
/// original (un-folded) token.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        match (ch.is_alphanumeric(), run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                tokens.push(make_token(text, s, i));
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run_start {
        tokens.push(make_token(text, s, text.len()));
    }
    tokens
}

fn make_token(text: &str, start: usize, end: usize) -> Token {
    Token { surface: text[start..end].to_lowercase(), start, end }
}

/// Window length and stride, both in tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowConfig {
    pub max_window_len: usize,
    pub stride: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig { max_window_len: 384, stride: 128 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WindowError {
    InvalidStride { stride: usize, max_window_len: usize },
}

impl fmt::Display for WindowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowError::InvalidStride { stride, max_window_len } => write!(
                f,
                "window stride must satisfy 0 < stride <= max_window_len (got stride {stride}, max_window_len {max_window_len})"
            ),
        }
    }
}

impl core::error::Error for WindowError {}

impl WindowConfig {
    pub fn validate(&self) -> Result<(), WindowError> {
        if self.stride == 0 || self.stride > self.max_window_len {
            return Err(WindowError::InvalidStride { stride: self.stride, max_window_len: self.max_window_len });
        }
        Ok(())
    }

    /// Half-open token ranges of the windows over `num_tokens` tokens.
    ///
    /// Starts advance by `stride` and stop at the first window that reaches
    /// the end of the token stream.
    pub fn ranges(&self, num_tokens: usize) -> Result<Vec<(usize, usize)>, WindowError> {
        self.validate()?;
        let mut out = Vec::new();
        let mut start = 0;
        while start < num_tokens {
            let end = (start + self.max_window_len).min(num_tokens);
            out.push((start, end));
            if end == num_tokens {
                break;
            }
            start += self.stride;
        }
        Ok(out)
    }
}

/// A contiguous slice of a document's tokens, the unit the extractor reads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub doc_id: String,
    pub window_index: usize,
    /// Index of the first token in document coordinates.
    pub first_token: usize,
    /// Index of the last token (inclusive) in document coordinates.
    pub last_token: usize,
    pub tokens: Vec<Token>,
}

impl Window {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Cuts an already-tokenized text into windows.
pub fn window_tokens(doc_id: &str, tokens: &[Token], config: &WindowConfig) -> Result<Vec<Window>, WindowError> {
    Ok(config
        .ranges(tokens.len())?
        .into_iter()
        .enumerate()
        .map(|(window_index, (start, end))| Window {
            doc_id: String::from(doc_id),
            window_index,
            first_token: start,
            last_token: end - 1,
            tokens: tokens[start..end].to_vec(),
        })
        .collect())
}

/// Tokenizes `doc` and cuts it into overlapping windows. A document without
/// tokens yields no windows.
pub fn window_document(doc: &Document, config: &WindowConfig) -> Result<Vec<Window>, WindowError> {
    window_tokens(&doc.doc_id, &tokenize(&doc.text), config)
}
