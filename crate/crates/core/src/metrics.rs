//! Answer scoring: SQuAD-style normalization, exact match, token F1, and
//! verdict accuracy.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::datasets::Ynn;

/// Lowercase, strip ASCII punctuation, drop the articles a/an/the, split on
/// whitespace.
pub fn normalize_answer(text: &str) -> Vec<String> {
    let cleaned: String = text.to_lowercase().chars().filter(|c| !c.is_ascii_punctuation()).collect();
    cleaned.split_whitespace().filter(|w| !matches!(*w, "a" | "an" | "the")).map(String::from).collect()
}

pub fn exact_match(pred: &str, gold: &str) -> bool {
    normalize_answer(pred) == normalize_answer(gold)
}

/// Multiset token-overlap F1. Both empty scores 1, exactly one empty scores 0.
pub fn token_f1(pred: &str, gold: &str) -> f64 {
    let p = normalize_answer(pred);
    let g = normalize_answer(gold);
    if p.is_empty() || g.is_empty() {
        return if p.is_empty() && g.is_empty() { 1.0 } else { 0.0 };
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &g {
        *counts.entry(t).or_insert(0) += 1;
    }
    let mut overlap = 0usize;
    for t in &p {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / p.len() as f64;
    let recall = overlap as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LengthMismatch {
    pub preds: usize,
    pub golds: usize,
}

impl fmt::Display for LengthMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} predictions for {} gold labels", self.preds, self.golds)
    }
}

impl core::error::Error for LengthMismatch {}

/// Fraction of matching verdicts; 0 for empty input.
pub fn ynn_accuracy(preds: &[Ynn], golds: &[Ynn]) -> Result<f64, LengthMismatch> {
    if preds.len() != golds.len() {
        return Err(LengthMismatch { preds: preds.len(), golds: golds.len() });
    }
    if preds.is_empty() {
        return Ok(0.0);
    }
    let hits = preds.iter().zip(golds).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / preds.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionScore {
    pub question_id: String,
    pub f1: f64,
    pub em: f64,
    pub ynn_correct: bool,
}

impl QuestionScore {
    pub fn score(question_id: &str, pred_text: &str, gold_text: &str, pred_ynn: Ynn, gold_ynn: Ynn) -> Self {
        QuestionScore {
            question_id: String::from(question_id),
            f1: token_f1(pred_text, gold_text),
            em: if exact_match(pred_text, gold_text) { 1.0 } else { 0.0 },
            ynn_correct: pred_ynn == gold_ynn,
        }
    }
}

/// Aggregate answer scores; every aggregate is the mean of `per_question`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub f1: f64,
    pub em: f64,
    pub ynn_accuracy: f64,
    pub per_question: Vec<QuestionScore>,
}

impl ScoreReport {
    pub fn from_scores(per_question: Vec<QuestionScore>) -> Self {
        let n = per_question.len();
        let mean = |f: &dyn Fn(&QuestionScore) -> f64| {
            if n == 0 {
                0.0
            } else {
                per_question.iter().map(f).sum::<f64>() / n as f64
            }
        };
        ScoreReport {
            f1: mean(&|q| q.f1),
            em: mean(&|q| q.em),
            ynn_accuracy: mean(&|q| if q.ynn_correct { 1.0 } else { 0.0 }),
            per_question,
        }
    }

    /// Plain-text table: configuration, hyperparameters, F1, EM, verdict accuracy.
    pub fn to_table(&self, config_name: &str, hyperparameters: &str) -> String {
        let header = ["Extractor Config", "Extractor Hyperparameters", "F1", "EM", "YNN Acc"];
        let row = [
            String::from(config_name),
            String::from(hyperparameters),
            format!("{:.3}", self.f1),
            format!("{:.3}", self.em),
            format!("{:.3}", self.ynn_accuracy),
        ];
        let widths: Vec<usize> = header.iter().zip(&row).map(|(h, r)| h.len().max(r.len())).collect();
        let line = |cells: &[&str]| {
            let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            format!("{}\n", parts.join(" | ").trim_end())
        };
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        let mut out = line(&header);
        out.push_str(&line(&rule.iter().map(String::as_str).collect::<Vec<_>>()));
        out.push_str(&line(&row.iter().map(String::as_str).collect::<Vec<_>>()));
        out
    }
}
