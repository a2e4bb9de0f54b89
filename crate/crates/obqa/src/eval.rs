//! Retriever and end-to-end evaluation runs, and their reports.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Instant;

use obqa_core::metrics::QuestionScore;
use obqa_core::retriever::{hit_at_k, precision_at_k};
use obqa_core::{QaExample, RankedList, ScoreReport, Ynn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::pipeline::{AnswerOutput, Pipeline, PipelineError};
use crate::retrieval::{RetrieveError, Retriever};

/// K values of the retriever table.
pub const DEFAULT_KS: [usize; 10] = [1, 3, 5, 7, 9, 13, 22, 30, 40, 60];

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("questions without a gold document: {}", .0.join(", "))]
    MissingGoldDoc(Vec<String>),
    #[error("K values must be strictly increasing and at least 1 (got {0:?})")]
    InvalidKs(Vec<usize>),
    #[error("question {question_id}: {source}")]
    Retrieve { question_id: String, source: RetrieveError },
}

/// Strict precision (k in the denominator) and gold-in-top-k rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrieverRow {
    pub k: usize,
    pub strict_precision: f64,
    pub hit_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrieverTable {
    pub retriever: String,
    pub num_questions: usize,
    pub rows: Vec<RetrieverRow>,
}

impl RetrieverTable {
    pub fn row(&self, k: usize) -> Option<&RetrieverRow> {
        self.rows.iter().find(|r| r.k == k)
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("Retriever: {} ({} questions)\n", self.retriever, self.num_questions);
        out.push_str("K   | P@K (strict) | hit@K\n");
        out.push_str("----|--------------|------\n");
        for r in &self.rows {
            let _ = writeln!(out, "{:<3} | {:<12.3} | {:.3}", r.k, r.strict_precision, r.hit_rate);
        }
        out
    }
}

fn check_ks(ks: &[usize]) -> Result<(), EvalError> {
    if ks.is_empty() || ks[0] == 0 || ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EvalError::InvalidKs(ks.to_vec()));
    }
    Ok(())
}

/// Scores one ranking per question against its single gold document.
pub fn retriever_table(name: &str, rankings: &[(RankedList, String)], ks: &[usize]) -> RetrieverTable {
    let n = rankings.len();
    let mean = |f: &dyn Fn(&RankedList, &str) -> f64| {
        if n == 0 {
            0.0
        } else {
            rankings.iter().map(|(r, g)| f(r, g)).sum::<f64>() / n as f64
        }
    };
    let rows = ks
        .iter()
        .map(|&k| RetrieverRow {
            k,
            strict_precision: mean(&|r, g| precision_at_k(r, &BTreeSet::from([g.to_string()]), k)),
            hit_rate: mean(&|r, g| if hit_at_k(r, g, k) { 1.0 } else { 0.0 }),
        })
        .collect();
    RetrieverTable { retriever: name.to_string(), num_questions: n, rows }
}

pub fn evaluate_retriever(
    dataset: &[QaExample],
    retriever: &dyn Retriever,
    ks: &[usize],
) -> Result<RetrieverTable, EvalError> {
    check_ks(ks)?;
    let missing: Vec<String> =
        dataset.iter().filter(|q| q.gold_doc_id().is_none()).map(|q| q.question_id.clone()).collect();
    if !missing.is_empty() {
        return Err(EvalError::MissingGoldDoc(missing));
    }
    let k_max = *ks.last().expect("checked non-empty");
    let rankings: Vec<(RankedList, String)> = dataset
        .par_iter()
        .map(|q| {
            let gold = q.gold_doc_id().expect("checked").to_string();
            retriever
                .retrieve(&q.question, k_max)
                .map(|r| (r, gold))
                .map_err(|source| EvalError::Retrieve { question_id: q.question_id.clone(), source })
        })
        .collect::<Result<_, _>>()?;
    Ok(retriever_table(retriever.name(), &rankings, ks))
}

/// Anything that answers a question the way the pipeline does.
pub trait QuestionAnswerer: Sync {
    fn answer(&self, question: &str) -> Result<AnswerOutput, PipelineError>;
}

impl QuestionAnswerer for Pipeline {
    fn answer(&self, question: &str) -> Result<AnswerOutput, PipelineError> {
        Pipeline::answer(self, question)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub question_id: String,
    pub text: String,
    pub ynn: Ynn,
    pub source_doc: String,
    pub confidence: f64,
    pub lexical_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionFailure {
    pub question_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub retriever_eval_ms: f64,
    pub answering_ms: f64,
}

/// Everything about one evaluation run. `timing` is the only field that
/// varies between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRunReport {
    pub config: serde_json::Value,
    pub num_questions: usize,
    pub retriever: Option<RetrieverTable>,
    pub extractor: ScoreReport,
    pub predictions: Vec<Prediction>,
    pub failures: Vec<QuestionFailure>,
    pub timing: StageTiming,
}

impl EvalRunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are finite")
    }

    /// JSON without the timing field, identical across repeated runs.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report values are finite");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing");
        }
        serde_json::to_string_pretty(&v).expect("value serializes")
    }

    pub fn to_text(&self, config_name: &str, hyperparameters: &str) -> String {
        let mut out = String::new();
        if let Some(t) = &self.retriever {
            out.push_str(&t.to_table());
            out.push('\n');
        }
        out.push_str(&self.extractor.to_table(config_name, hyperparameters));
        if !self.failures.is_empty() {
            let _ = writeln!(out, "\n{} question(s) failed", self.failures.len());
        }
        out
    }
}

/// Answers every question (in parallel) and scores the answers. Failed
/// questions are recorded and score zero on every metric. When `retriever`
/// is given, a retriever table over `ks` is included.
pub fn evaluate_e2e(
    dataset: &[QaExample],
    answerer: &dyn QuestionAnswerer,
    retriever: Option<&dyn Retriever>,
    ks: &[usize],
    config: serde_json::Value,
) -> Result<EvalRunReport, EvalError> {
    let t0 = Instant::now();
    let table = retriever.map(|r| evaluate_retriever(dataset, r, ks)).transpose()?;
    let retriever_eval_ms = t0.elapsed().as_secs_f64() * 1e3;

    let t1 = Instant::now();
    let mut outcomes: Vec<(&QaExample, Result<AnswerOutput, String>)> =
        dataset.par_iter().map(|q| (q, answerer.answer(&q.question).map_err(|e| e.to_string()))).collect();
    let answering_ms = t1.elapsed().as_secs_f64() * 1e3;
    outcomes.sort_by(|a, b| a.0.question_id.cmp(&b.0.question_id));

    let mut scores = Vec::with_capacity(outcomes.len());
    let mut predictions = Vec::new();
    let mut failures = Vec::new();
    for (q, outcome) in outcomes {
        match outcome {
            Ok(out) => {
                let a = &out.answer;
                scores.push(QuestionScore::score(&q.question_id, &a.text, &q.gold_text, a.ynn, q.gold_ynn));
                predictions.push(Prediction {
                    question_id: q.question_id.clone(),
                    text: a.text.clone(),
                    ynn: a.ynn,
                    source_doc: a.source_doc.clone(),
                    confidence: a.confidence,
                    lexical_fallback: out.lexical_fallback,
                });
            }
            Err(error) => {
                scores.push(QuestionScore { question_id: q.question_id.clone(), f1: 0.0, em: 0.0, ynn_correct: false });
                failures.push(QuestionFailure { question_id: q.question_id.clone(), error });
            }
        }
    }
    Ok(EvalRunReport {
        config,
        num_questions: dataset.len(),
        retriever: table,
        extractor: ScoreReport::from_scores(scores),
        predictions,
        failures,
        timing: StageTiming { retriever_eval_ms, answering_ms },
    })
}
