//! QA examples and their conversion into labeled training windows.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, window_tokens, CorpusStore, Token, Window, WindowConfig, WindowError};
use crate::extractor::AnswerLabel;

/// Yes / no / none verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ynn {
    Yes,
    No,
    None,
}

impl Ynn {
    pub const ALL: [Ynn; 3] = [Ynn::Yes, Ynn::No, Ynn::None];

    /// Position in the verdict head's output.
    pub fn index(self) -> usize {
        match self {
            Ynn::Yes => 0,
            Ynn::No => 1,
            Ynn::None => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Ynn> {
        Ynn::ALL.get(i).copied()
    }

    /// Case-insensitive parse of "yes", "no" or "none".
    pub fn parse(s: &str) -> Option<Ynn> {
        Ynn::ALL.into_iter().find(|y| y.as_str().eq_ignore_ascii_case(s.trim()))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Ynn::Yes => "yes",
            Ynn::No => "no",
            Ynn::None => "none",
        }
    }

    /// Verdict with the highest probability; the first wins ties.
    pub fn argmax(probs: &[f64; 3]) -> Ynn {
        let mut best = 0;
        for i in 1..3 {
            if probs[i] > probs[best] {
                best = i;
            }
        }
        Ynn::ALL[best]
    }
}

impl fmt::Display for Ynn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where an example's answer lives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoldSource {
    /// A corpus document (evaluation sets).
    Document { doc_id: String },
    /// An inline passage (SQuAD). `answer_start` is a character offset.
    Context { context: String, answer_start: Option<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaExample {
    pub question_id: String,
    pub question: String,
    /// Empty for unanswerable examples.
    pub gold_text: String,
    pub gold_ynn: Ynn,
    pub source: GoldSource,
}

impl QaExample {
    pub fn gold_doc_id(&self) -> Option<&str> {
        match &self.source {
            GoldSource::Document { doc_id } => Some(doc_id),
            GoldSource::Context { .. } => None,
        }
    }
}

/// One extractor training datapoint: question, window, and labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledWindow {
    pub question_id: String,
    pub question: String,
    pub window: Window,
    pub label: AnswerLabel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelingError {
    MissingDocument { question_id: String, doc_id: String },
    AnswerNotFound { question_id: String },
    Window(WindowError),
}

impl fmt::Display for LabelingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelingError::MissingDocument { question_id, doc_id } => {
                write!(f, "question {question_id}: document `{doc_id}` is not in the corpus")
            }
            LabelingError::AnswerNotFound { question_id } => {
                write!(f, "question {question_id}: gold answer not found in its context")
            }
            LabelingError::Window(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for LabelingError {}

fn char_to_byte(text: &str, char_offset: usize) -> Option<usize> {
    if char_offset == text.chars().count() {
        return Some(text.len());
    }
    text.char_indices().nth(char_offset).map(|(b, _)| b)
}

/// Byte range of the gold answer: the given character offset when it
/// matches, otherwise the first verbatim occurrence.
fn locate_answer(text: &str, gold: &str, answer_start: Option<usize>) -> Option<(usize, usize)> {
    if let Some(b) = answer_start.and_then(|c| char_to_byte(text, c)) {
        if text[b..].starts_with(gold) {
            return Some((b, b + gold.len()));
        }
    }
    text.find(gold).map(|b| (b, b + gold.len()))
}

/// Token range covering a byte range, snapped outward to whole tokens.
fn token_span(tokens: &[Token], start: usize, end: usize) -> Option<(usize, usize)> {
    let first = tokens.iter().position(|t| t.end > start)?;
    let last = tokens.iter().rposition(|t| t.start < end)?;
    (first <= last).then_some((first, last))
}

/// Splits the example's context into windows and labels each one.
///
/// Windows holding the whole answer span get its start/end positions and the
/// example's verdict; every other window is labeled empty with verdict none.
pub fn make_training_windows(
    example: &QaExample,
    corpus: &CorpusStore,
    config: &WindowConfig,
) -> Result<Vec<LabeledWindow>, LabelingError> {
    let (doc_id, text, answer_start) = match &example.source {
        GoldSource::Document { doc_id } => {
            let doc = corpus.get(doc_id).ok_or_else(|| LabelingError::MissingDocument {
                question_id: example.question_id.clone(),
                doc_id: doc_id.clone(),
            })?;
            (doc_id.as_str(), doc.text.as_str(), None)
        }
        GoldSource::Context { context, answer_start } => {
            (example.question_id.as_str(), context.as_str(), *answer_start)
        }
    };
    let tokens = tokenize(text);
    let span = if example.gold_text.is_empty() {
        None
    } else {
        let not_found = || LabelingError::AnswerNotFound { question_id: example.question_id.clone() };
        let (s, e) = locate_answer(text, &example.gold_text, answer_start).ok_or_else(not_found)?;
        Some(token_span(&tokens, s, e).ok_or_else(not_found)?)
    };
    let windows = window_tokens(doc_id, &tokens, config).map_err(LabelingError::Window)?;
    Ok(windows
        .into_iter()
        .map(|window| {
            let label = match span {
                Some((s, e)) if s >= window.first_token && e <= window.last_token => AnswerLabel {
                    start_positions: [s - window.first_token].into_iter().collect(),
                    end_positions: [e - window.first_token].into_iter().collect(),
                    ynn: example.gold_ynn,
                },
                _ => AnswerLabel::empty(),
            };
            LabeledWindow {
                question_id: example.question_id.clone(),
                question: example.question.clone(),
                window,
                label,
            }
        })
        .collect())
}

/// Text of window tokens `start..=end`, sliced from the original `text`.
pub fn span_text<'a>(text: &'a str, window: &Window, start: usize, end: usize) -> &'a str {
    &text[window.tokens[start].start..window.tokens[end].end]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use crate::metrics::normalize_answer;
    use alloc::string::ToString;
    use alloc::vec;

    fn squad_example(context: &str, answer: &str) -> QaExample {
        QaExample {
            question_id: "q1".into(),
            question: "what?".into(),
            gold_text: answer.into(),
            gold_ynn: Ynn::None,
            source: GoldSource::Context { context: context.into(), answer_start: context.find(answer) },
        }
    }

    #[test]
    fn ynn_parse_and_index() {
        assert_eq!(Ynn::parse("None"), Some(Ynn::None));
        assert_eq!(Ynn::parse(" YES "), Some(Ynn::Yes));
        assert_eq!(Ynn::parse("maybe"), None);
        for y in Ynn::ALL {
            assert_eq!(Ynn::from_index(y.index()), Some(y));
        }
        assert_eq!(Ynn::argmax(&[0.2, 0.5, 0.3]), Ynn::No);
        assert_eq!(Ynn::argmax(&[0.4, 0.4, 0.2]), Ynn::Yes);
    }

    #[test]
    fn short_context_single_window() {
        let ex = squad_example("The maximum is 1 billion rows.", "1 billion");
        let w = make_training_windows(&ex, &CorpusStore::default(), &WindowConfig::default()).unwrap();
        assert_eq!(w.len(), 1);
        let l = &w[0].label;
        assert_eq!(l.start_positions.iter().copied().collect::<Vec<_>>(), vec![3]);
        assert_eq!(l.end_positions.iter().copied().collect::<Vec<_>>(), vec![4]);
    }

    #[test]
    fn partial_token_answers_snap_outward() {
        let ex = squad_example("storage-types are listed", "orage-ty");
        let w = make_training_windows(&ex, &CorpusStore::default(), &WindowConfig::default()).unwrap();
        assert_eq!(span_text("storage-types are listed", &w[0].window, 0, 1), "storage-types");
        assert!(w[0].label.start_positions.contains(&0) && w[0].label.end_positions.contains(&1));
    }

    #[test]
    fn unanswerable_gets_empty_labels() {
        let ex = squad_example("nothing to see here at all", "");
        let cfg = WindowConfig { max_window_len: 2, stride: 1 };
        let w = make_training_windows(&ex, &CorpusStore::default(), &cfg).unwrap();
        assert!(!w.is_empty());
        assert!(w.iter().all(|lw| lw.label == AnswerLabel::empty()));
    }

    #[test]
    fn missing_answer_and_document_are_errors() {
        let ex = squad_example("abc def", "xyz");
        assert_eq!(
            make_training_windows(&ex, &CorpusStore::default(), &WindowConfig::default()),
            Err(LabelingError::AnswerNotFound { question_id: "q1".into() })
        );
        let ex =
            QaExample { source: GoldSource::Document { doc_id: "nope.txt".into() }, ..squad_example("abc", "abc") };
        assert!(matches!(
            make_training_windows(&ex, &CorpusStore::default(), &WindowConfig::default()),
            Err(LabelingError::MissingDocument { .. })
        ));
    }

    #[test]
    fn document_source_uses_corpus_text() {
        let corpus =
            CorpusStore::new(vec![Document::new("a.txt", "You can't stop a DB instance that has a read replica.")])
                .unwrap();
        let ex = QaExample {
            question_id: "q2".into(),
            question: "Can I stop a DB instance that has a read replica?".into(),
            gold_text: "You can't stop a DB instance".into(),
            gold_ynn: Ynn::No,
            source: GoldSource::Document { doc_id: "a.txt".into() },
        };
        let w = make_training_windows(&ex, &corpus, &WindowConfig::default()).unwrap();
        assert_eq!(w[0].label.ynn, Ynn::No);
        assert_eq!(w[0].window.doc_id, "a.txt");
    }

    #[test]
    fn char_offsets_with_multibyte_context() {
        let context = "Ünïcode café sells 1 billion croissants";
        let byte = context.find("1 billion").unwrap();
        let answer_start = Some(context[..byte].chars().count());
        assert_ne!(answer_start, Some(byte));
        let ex = QaExample {
            source: GoldSource::Context { context: context.into(), answer_start },
            ..squad_example(context, "1 billion")
        };
        let w = make_training_windows(&ex, &CorpusStore::default(), &WindowConfig::default()).unwrap();
        let l = &w[0].label;
        let s = *l.start_positions.iter().next().unwrap();
        let e = *l.end_positions.iter().next().unwrap();
        assert_eq!(span_text(context, &w[0].window, s, e), "1 billion");
    }

    /// Independent check over the windowing arithmetic: for every placement of
    /// a short answer in a longer context, some window holds the whole span
    /// and its labels detokenize to the answer.
    #[test]
    fn straddling_answers_are_fully_contained_somewhere() {
        let cfg = WindowConfig { max_window_len: 6, stride: 3 };
        for pos in 0..18 {
            let mut words: Vec<String> = (0..20).map(|i| alloc::format!("w{i}")).collect();
            words[pos] = "general".to_string();
            words[pos + 1] = "purpose".to_string();
            let context = words.join(" ");
            let ex = squad_example(&context, "general purpose");
            let windows = make_training_windows(&ex, &CorpusStore::default(), &cfg).unwrap();
            let labeled: Vec<_> = windows.iter().filter(|w| w.label.has_span()).collect();
            assert!(!labeled.is_empty(), "answer at {pos} not fully inside any window");
            for lw in labeled {
                let s = *lw.label.start_positions.iter().next().unwrap();
                let e = *lw.label.end_positions.iter().next().unwrap();
                let text = span_text(&context, &lw.window, s, e);
                assert_eq!(normalize_answer(text), normalize_answer("general purpose"));
            }
        }
    }
}
