//! Turns start/end probabilities into text spans and a final answer.
//!
//! Within a window, every start above the threshold is paired with the
//! nearest unused end above the threshold that is at or after it and within
//! `max_span_len`. When nothing pairs, the single best `(start, end)` pair is
//! emitted instead, so a question always gets an answer.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::Window;
use crate::datasets::Ynn;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeConfig {
    pub threshold: f64,
    pub max_span_len: usize,
    pub join_separator: String,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig { threshold: 0.5, max_span_len: 30, join_separator: String::from(" ") }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecodeError {
    LengthMismatch { start: usize, end: usize },
    EmptyWindow,
    InvalidThreshold(f64),
    ZeroMaxSpanLen,
    NoWindows,
    NoDocuments,
}

impl fmt::Display for DecodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodeError::LengthMismatch { start, end } => {
                write!(f, "start and end probabilities differ in length ({start} vs {end})")
            }
            DecodeError::EmptyWindow => f.write_str("cannot decode an empty window"),
            DecodeError::InvalidThreshold(t) => write!(f, "threshold must lie strictly between 0 and 1 (got {t})"),
            DecodeError::ZeroMaxSpanLen => f.write_str("max_span_len must be at least 1"),
            DecodeError::NoWindows => f.write_str("document has no window results"),
            DecodeError::NoDocuments => f.write_str("no document results to select from"),
        }
    }
}

impl core::error::Error for DecodeError {}

/// A span in window token coordinates (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpan {
    pub start: usize,
    pub end: usize,
    /// (ps[start] + pe[end]) / 2
    pub score: f64,
    /// Emitted by the argmax fallback rather than the threshold rule.
    pub fallback: bool,
}

pub fn decode_window(
    start_probs: &[f64],
    end_probs: &[f64],
    threshold: f64,
    max_span_len: usize,
) -> Result<Vec<WindowSpan>, DecodeError> {
    if start_probs.len() != end_probs.len() {
        return Err(DecodeError::LengthMismatch { start: start_probs.len(), end: end_probs.len() });
    }
    if start_probs.is_empty() {
        return Err(DecodeError::EmptyWindow);
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(DecodeError::InvalidThreshold(threshold));
    }
    if max_span_len == 0 {
        return Err(DecodeError::ZeroMaxSpanLen);
    }
    let n = start_probs.len();
    let mut end_used = alloc::vec![false; n];
    let mut spans = Vec::new();
    for i in (0..n).filter(|&i| start_probs[i] > threshold) {
        let limit = (i + max_span_len).min(n);
        if let Some(j) = (i..limit).find(|&j| end_probs[j] > threshold && !end_used[j]) {
            end_used[j] = true;
            spans.push(WindowSpan { start: i, end: j, score: (start_probs[i] + end_probs[j]) / 2.0, fallback: false });
        }
    }
    if spans.is_empty() {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for i in 0..n {
            for j in i..(i + max_span_len).min(n) {
                let s = start_probs[i] + end_probs[j];
                if s > best.2 {
                    best = (i, j, s);
                }
            }
        }
        spans.push(WindowSpan { start: best.0, end: best.1, score: best.2 / 2.0, fallback: true });
    }
    Ok(spans)
}

/// A span resolved against its document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanCandidate {
    pub doc_id: String,
    pub window_index: usize,
    /// Document token coordinates, inclusive.
    pub start_token: usize,
    pub end_token: usize,
    /// Byte range in the document text.
    pub char_start: usize,
    pub char_end: usize,
    pub score: f64,
    pub text: String,
    pub fallback: bool,
}

impl SpanCandidate {
    pub fn from_window_span(window: &Window, doc_text: &str, span: &WindowSpan) -> Self {
        let char_start = window.tokens[span.start].start;
        let char_end = window.tokens[span.end].end;
        SpanCandidate {
            doc_id: window.doc_id.clone(),
            window_index: window.window_index,
            start_token: window.first_token + span.start,
            end_token: window.first_token + span.end,
            char_start,
            char_end,
            score: span.score,
            text: String::from(&doc_text[char_start..char_end]),
            fallback: span.fallback,
        }
    }

    fn overlaps(&self, other: &SpanCandidate) -> bool {
        self.char_start < other.char_end && other.char_start < self.char_end
    }
}

/// Decoded spans and verdict probabilities for one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowResult {
    pub window_index: usize,
    pub spans: Vec<SpanCandidate>,
    pub ynn_probs: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentAnswer {
    pub doc_id: String,
    /// Non-overlapping, in document order.
    pub spans: Vec<SpanCandidate>,
    pub ynn: Ynn,
    pub confidence: f64,
}

/// Merges per-window spans into one answer for the document.
///
/// Fallback spans are only used when no window produced a thresholded span,
/// and then only the best one. Identical character ranges collapse to the
/// highest score; overlapping spans keep the higher-scoring one. The verdict
/// comes from the window that produced the best span.
pub fn decode_document(doc_id: &str, windows: &[WindowResult]) -> Result<DocumentAnswer, DecodeError> {
    if windows.is_empty() {
        return Err(DecodeError::NoWindows);
    }
    let all = windows.iter().flat_map(|w| w.spans.iter());
    let mut spans: Vec<SpanCandidate> = if all.clone().any(|s| !s.fallback) {
        all.filter(|s| !s.fallback).cloned().collect()
    } else {
        all.cloned().collect()
    };
    if spans.is_empty() {
        return Err(DecodeError::NoWindows);
    }
    spans.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.char_start.cmp(&b.char_start))
            .then(a.char_end.cmp(&b.char_end))
    });
    let only_fallback = spans[0].fallback;
    let mut kept: Vec<SpanCandidate> = Vec::new();
    for s in spans {
        if kept.iter().any(|k| k.overlaps(&s)) {
            continue;
        }
        kept.push(s);
        if only_fallback {
            break;
        }
    }
    let best = &kept[0];
    let ynn_probs =
        windows.iter().find(|w| w.window_index == best.window_index).map_or([0.0, 0.0, 1.0], |w| w.ynn_probs);
    let ynn = Ynn::argmax(&ynn_probs);
    let confidence = best.score;
    kept.sort_by_key(|s| s.char_start);
    Ok(DocumentAnswer { doc_id: String::from(doc_id), spans: kept, ynn, confidence })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalAnswer {
    pub text: String,
    pub spans: Vec<SpanCandidate>,
    pub ynn: Ynn,
    pub source_doc: String,
    pub confidence: f64,
}

/// Picks the document with the highest confidence (earlier rank wins ties)
/// and joins its span texts.
pub fn select_answer(docs: &[DocumentAnswer], join_separator: &str) -> Result<FinalAnswer, DecodeError> {
    let mut best: Option<&DocumentAnswer> = None;
    for d in docs {
        if best.is_none_or(|b| d.confidence > b.confidence) {
            best = Some(d);
        }
    }
    let win = best.ok_or(DecodeError::NoDocuments)?;
    let texts: Vec<&str> = win.spans.iter().map(|s| s.text.as_str()).collect();
    Ok(FinalAnswer {
        text: texts.join(join_separator),
        spans: win.spans.clone(),
        ynn: win.ynn,
        source_doc: win.doc_id.clone(),
        confidence: win.confidence,
    })
}
