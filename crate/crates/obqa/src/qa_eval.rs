//! Corpus QA evaluation files: JSON lines of
//! `{question_id, question, answer, ynn, doc_id}`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use obqa_core::{GoldSource, QaExample, Ynn};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum QaEvalError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Line { path: PathBuf, line: usize, message: String },
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    question_id: Option<String>,
    question: String,
    answer: String,
    ynn: String,
    doc_id: String,
}

/// Parses JSON-lines text; blank lines are ignored. A missing
/// `question_id` becomes `line-<n>`.
pub fn parse_qa_eval(text: &str, path: &Path) -> Result<Vec<QaExample>, QaEvalError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let err = |message: String| QaEvalError::Line { path: path.into(), line, message };
        let row: Row = serde_json::from_str(raw).map_err(|e| err(e.to_string()))?;
        let ynn = Ynn::parse(&row.ynn)
            .ok_or_else(|| err(format!("unknown ynn value `{}` (expected yes, no or none)", row.ynn)))?;
        out.push(QaExample {
            question_id: row.question_id.unwrap_or_else(|| format!("line-{line}")),
            question: row.question,
            gold_text: row.answer,
            gold_ynn: ynn,
            source: GoldSource::Document { doc_id: row.doc_id },
        });
    }
    Ok(out)
}

pub fn load_qa_eval(path: &Path) -> Result<Vec<QaExample>, QaEvalError> {
    let text = fs::read_to_string(path).map_err(|source| QaEvalError::Io { path: path.into(), source })?;
    parse_qa_eval(&text, path)
}

/// Serializes document-sourced examples; context-sourced ones are skipped.
pub fn to_qa_eval_lines(examples: &[QaExample]) -> String {
    let mut out = String::new();
    for ex in examples {
        let Some(doc_id) = ex.gold_doc_id() else { continue };
        let row = Row {
            question_id: Some(ex.question_id.clone()),
            question: ex.question.clone(),
            answer: ex.gold_text.clone(),
            ynn: ex.gold_ynn.as_str().to_string(),
            doc_id: doc_id.to_string(),
        };
        out.push_str(&serde_json::to_string(&row).expect("plain strings serialize"));
        out.push('\n');
    }
    out
}

pub fn write_qa_eval(path: &Path, examples: &[QaExample]) -> Result<(), QaEvalError> {
    fs::write(path, to_qa_eval_lines(examples)).map_err(|source| QaEvalError::Io { path: path.into(), source })
}
