//! Runs the extractor over every window of a document and decodes the result.

use alloc::vec::Vec;
use core::fmt;

use crate::corpus::{window_document, Document, Token, WindowConfig, WindowError};
use crate::decoder::{
    decode_document, decode_window, DecodeConfig, DecodeError, DocumentAnswer, SpanCandidate, WindowResult,
};
use crate::extractor::{predict, ExtractorError, ModelParams};

#[derive(Debug, Clone, PartialEq)]
pub enum ReadError {
    Window(WindowError),
    Extractor(ExtractorError),
    Decode(DecodeError),
}

impl fmt::Display for ReadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReadError::Window(e) => write!(f, "{e}"),
            ReadError::Extractor(e) => write!(f, "{e}"),
            ReadError::Decode(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ReadError {}

impl From<WindowError> for ReadError {
    fn from(e: WindowError) -> Self {
        ReadError::Window(e)
    }
}

impl From<ExtractorError> for ReadError {
    fn from(e: ExtractorError) -> Self {
        ReadError::Extractor(e)
    }
}

impl From<DecodeError> for ReadError {
    fn from(e: DecodeError) -> Self {
        ReadError::Decode(e)
    }
}

/// Per-window spans and verdict probabilities for `doc`. Documents without
/// tokens yield no windows.
pub fn read_windows(
    params: &ModelParams,
    question: &[Token],
    doc: &Document,
    windows: &WindowConfig,
    decode: &DecodeConfig,
) -> Result<Vec<WindowResult>, ReadError> {
    let mut out = Vec::new();
    for w in window_document(doc, windows)? {
        let pred = predict(params, question, &w)?;
        let spans = decode_window(&pred.probs.start, &pred.probs.end, decode.threshold, decode.max_span_len)?;
        out.push(WindowResult {
            window_index: w.window_index,
            spans: spans.iter().map(|s| SpanCandidate::from_window_span(&w, &doc.text, s)).collect(),
            ynn_probs: pred.probs.ynn,
        });
    }
    Ok(out)
}

/// Decoded answer for one document, or `None` when it has no tokens.
pub fn read_document(
    params: &ModelParams,
    question: &[Token],
    doc: &Document,
    windows: &WindowConfig,
    decode: &DecodeConfig,
) -> Result<Option<DocumentAnswer>, ReadError> {
    let results = read_windows(params, question, doc, windows, decode)?;
    if results.is_empty() {
        return Ok(None);
    }
    Ok(Some(decode_document(&doc.doc_id, &results)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use crate::extractor::EncoderConfig;

    #[test]
    fn reads_every_window_and_offsets_are_in_document() {
        let params = ModelParams::init(EncoderConfig::toy()).unwrap();
        let text = "alpha beta gamma delta epsilon zeta eta theta iota kappa lambda mu nu xi omicron pi rho sigma \
                    tau upsilon phi chi psi omega one two three four five six seven eight nine ten eleven twelve";
        let doc = Document::new("d", text);
        let wc = WindowConfig { max_window_len: 16, stride: 8 };
        let q = tokenize("which letter?");
        let res = read_windows(&params, &q, &doc, &wc, &DecodeConfig::default()).unwrap();
        assert_eq!(res.len(), wc.ranges(tokenize(text).len()).unwrap().len());
        for r in &res {
            assert!(!r.spans.is_empty());
            for s in &r.spans {
                assert_eq!(&text[s.char_start..s.char_end], s.text);
            }
        }
        let ans = read_document(&params, &q, &doc, &wc, &DecodeConfig::default()).unwrap().unwrap();
        assert_eq!(ans.doc_id, "d");
        assert!(read_document(&params, &q, &Document::new("e", "!!"), &wc, &DecodeConfig::default())
            .unwrap()
            .is_none());
    }
}
