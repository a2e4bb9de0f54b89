//! Binary index format.
//!
//! ```text
//! magic "OBQAIDX\0" | version u32 | k1 f64 | b f64
//! num_docs u64 | { doc_id str | length u32 } * num_docs
//! num_terms u64 | { term str | n u32 | { doc u32 | tf u32 } * n } * num_terms
//! ```
//!
//! Integers and floats are little-endian, strings are u32-length-prefixed
//! UTF-8. Documents and terms are stored in ascending byte order.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::{Bm25Params, InvertedIndex, Posting};
use crate::bytes::{Reader, Truncated, Writer};

pub const INDEX_MAGIC: &[u8; 8] = b"OBQAIDX\0";
pub const INDEX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeIndexError {
    BadMagic,
    UnsupportedVersion(u32),
    Truncated { offset: usize },
    InvalidUtf8 { offset: usize },
    Corrupt(&'static str),
    TrailingBytes { offset: usize },
}

impl fmt::Display for DecodeIndexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodeIndexError::BadMagic => f.write_str("not an index file (bad magic)"),
            DecodeIndexError::UnsupportedVersion(v) => write!(f, "unsupported index format version {v}"),
            DecodeIndexError::Truncated { offset } => write!(f, "index truncated at byte {offset}"),
            DecodeIndexError::InvalidUtf8 { offset } => write!(f, "invalid UTF-8 string before byte {offset}"),
            DecodeIndexError::Corrupt(what) => write!(f, "corrupt index: {what}"),
            DecodeIndexError::TrailingBytes { offset } => write!(f, "unexpected bytes after offset {offset}"),
        }
    }
}

impl core::error::Error for DecodeIndexError {}

impl From<Truncated> for DecodeIndexError {
    fn from(t: Truncated) -> Self {
        DecodeIndexError::Truncated { offset: t.0 }
    }
}

fn read_str(r: &mut Reader<'_>) -> Result<String, DecodeIndexError> {
    r.str()?.ok_or(DecodeIndexError::InvalidUtf8 { offset: r.pos() })
}

impl InvertedIndex {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.bytes(INDEX_MAGIC);
        w.u32(INDEX_FORMAT_VERSION);
        w.f64(self.params.k1);
        w.f64(self.params.b);
        w.u64(self.doc_ids.len() as u64);
        for (id, len) in self.doc_ids.iter().zip(&self.doc_lengths) {
            w.str(id);
            w.u32(*len);
        }
        w.u64(self.postings.len() as u64);
        for (term, list) in &self.postings {
            w.str(term);
            w.u32(list.len() as u32);
            for p in list {
                w.u32(p.doc);
                w.u32(p.tf);
            }
        }
        w.buf
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, DecodeIndexError> {
        let mut r = Reader::new(data);
        if r.take(INDEX_MAGIC.len()).map_err(|_| DecodeIndexError::BadMagic)? != INDEX_MAGIC {
            return Err(DecodeIndexError::BadMagic);
        }
        let version = r.u32()?;
        if version != INDEX_FORMAT_VERSION {
            return Err(DecodeIndexError::UnsupportedVersion(version));
        }
        let params = Bm25Params { k1: r.f64()?, b: r.f64()? };

        let num_docs = r.u64()? as usize;
        if num_docs == 0 {
            return Err(DecodeIndexError::Corrupt("index has no documents"));
        }
        let mut doc_ids: Vec<String> = Vec::new();
        let mut doc_lengths = Vec::new();
        for _ in 0..num_docs {
            let id = read_str(&mut r)?;
            if doc_ids.last().is_some_and(|prev| *prev >= id) {
                return Err(DecodeIndexError::Corrupt("document ids not strictly ascending"));
            }
            doc_ids.push(id);
            doc_lengths.push(r.u32()?);
        }

        let num_terms = r.u64()? as usize;
        let mut postings = BTreeMap::new();
        let mut last_term: Option<String> = None;
        for _ in 0..num_terms {
            let term = read_str(&mut r)?;
            if last_term.as_ref().is_some_and(|prev| *prev >= term) {
                return Err(DecodeIndexError::Corrupt("terms not strictly ascending"));
            }
            let n = r.u32()? as usize;
            let mut list: Vec<Posting> = Vec::new();
            for _ in 0..n {
                let p = Posting { doc: r.u32()?, tf: r.u32()? };
                if p.doc as usize >= num_docs || p.tf == 0 {
                    return Err(DecodeIndexError::Corrupt("posting out of range"));
                }
                if list.last().is_some_and(|prev| prev.doc >= p.doc) {
                    return Err(DecodeIndexError::Corrupt("postings not ascending"));
                }
                list.push(p);
            }
            if list.is_empty() {
                return Err(DecodeIndexError::Corrupt("empty posting list"));
            }
            last_term = Some(term.clone());
            postings.insert(term, list);
        }
        if !r.is_at_end() {
            return Err(DecodeIndexError::TrailingBytes { offset: r.pos() });
        }
        Ok(InvertedIndex::from_parts(params, doc_ids, doc_lengths, postings))
    }
}
