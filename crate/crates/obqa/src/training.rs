//! Turns QA examples into labeled training windows.

use obqa_core::datasets::LabelingError;
use obqa_core::{make_training_windows, CorpusStore, LabeledWindow, QaExample, WindowConfig};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedExample {
    pub question_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelingSummary {
    pub windows: Vec<LabeledWindow>,
    /// Examples whose answer could not be located; skipped and counted.
    pub skipped: Vec<SkippedExample>,
}

/// Labels every window of every example. `corpus` resolves document-sourced
/// examples and is ignored for context-sourced (SQuAD) ones. A window
/// configuration error aborts; other labeling errors skip the example.
pub fn label_examples(
    examples: &[QaExample],
    corpus: &CorpusStore,
    windows: &WindowConfig,
) -> Result<LabelingSummary, LabelingError> {
    windows.validate().map_err(LabelingError::Window)?;
    let mut out = LabelingSummary { windows: Vec::new(), skipped: Vec::new() };
    for ex in examples {
        match make_training_windows(ex, corpus, windows) {
            Ok(w) => out.windows.extend(w),
            Err(e @ LabelingError::Window(_)) => return Err(e),
            Err(e) => {
                log::warn!("skipping {}: {e}", ex.question_id);
                out.skipped.push(SkippedExample { question_id: ex.question_id.clone(), error: e.to_string() });
            }
        }
    }
    Ok(out)
}
