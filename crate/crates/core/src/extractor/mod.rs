//! Neural extractor: encoder stand-in, start/end/verdict heads, joint loss,
//! AdamW training, finite-difference gradient checking, and checkpoints.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Token, Window};
use crate::datasets::{LabeledWindow, Ynn};

mod checkpoint;
mod config;
mod encoder;
mod gradcheck;
mod heads;
mod linalg;
mod loss;
mod params;
mod train;

pub use checkpoint::{DecodeCheckpointError, CHECKPOINT_FORMAT_VERSION, CHECKPOINT_MAGIC};
pub use config::{ConfigError, EncoderConfig};
pub use encoder::{encode, token_row, EncodedWindow};
pub use gradcheck::{grad_check, grad_check_with, CoordinateSet, GradCheckReport};
pub use heads::{heads_forward, probabilities, sigmoid, softmax3, HeadLogits, Probabilities};
pub use loss::loss;
pub use params::{LayerSlots, Layout, ModelParams};
pub use train::{train, train_from, TrainConfig, TrainError, TrainOutcome};

/// Gold labels for one window: start and end token positions plus the verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerLabel {
    pub start_positions: BTreeSet<usize>,
    pub end_positions: BTreeSet<usize>,
    pub ynn: Ynn,
}

impl AnswerLabel {
    /// A window that holds no answer.
    pub fn empty() -> Self {
        AnswerLabel { start_positions: BTreeSet::new(), end_positions: BTreeSet::new(), ynn: Ynn::None }
    }

    pub fn has_span(&self) -> bool {
        !self.start_positions.is_empty()
    }

    pub fn validate(&self, window_len: usize) -> Result<(), ExtractorError> {
        for &i in self.start_positions.iter().chain(&self.end_positions) {
            if i >= window_len {
                return Err(ExtractorError::LabelOutOfRange { index: i, len: window_len });
            }
        }
        for &e in &self.end_positions {
            if self.start_positions.range(..=e).next().is_none() {
                return Err(ExtractorError::InvalidLabel("end position without a start at or before it"));
            }
        }
        if self.start_positions.is_empty() != self.end_positions.is_empty() {
            return Err(ExtractorError::InvalidLabel("start and end sets must both be empty or both non-empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtractorError {
    WindowTooLong { len: usize, max: usize },
    EmptyWindow,
    LabelOutOfRange { index: usize, len: usize },
    InvalidLabel(&'static str),
    LengthMismatch { start: usize, end: usize },
}

impl fmt::Display for ExtractorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtractorError::WindowTooLong { len, max } => {
                write!(f, "window has {len} tokens but the encoder accepts at most {max}; re-window the document")
            }
            ExtractorError::EmptyWindow => f.write_str("window has no tokens"),
            ExtractorError::LabelOutOfRange { index, len } => {
                write!(f, "label position {index} outside a window of {len} tokens")
            }
            ExtractorError::InvalidLabel(why) => write!(f, "invalid label: {why}"),
            ExtractorError::LengthMismatch { start, end } => {
                write!(f, "start/end lengths differ ({start} vs {end})")
            }
        }
    }
}

impl core::error::Error for ExtractorError {}

/// Everything the decoder needs from one forward pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowPrediction {
    pub logits: HeadLogits,
    pub probs: Probabilities,
}

/// Single forward pass: encoder, heads, probabilities.
pub fn predict(params: &ModelParams, question: &[Token], window: &Window) -> Result<WindowPrediction, ExtractorError> {
    let enc = encode(params, question, window)?;
    let logits = heads_forward(params, &enc);
    let probs = probabilities(&logits);
    Ok(WindowPrediction { logits, probs })
}

/// Loss of one labeled window and its gradient with respect to every parameter.
pub fn loss_and_gradient(params: &ModelParams, example: &LabeledWindow) -> Result<(f64, Vec<f64>), ExtractorError> {
    let mut grads = vec![0.0; params.len()];
    let value = accumulate_gradient(params, example, &mut grads)?;
    Ok((value, grads))
}

/// Adds the gradient of one example into `grads`; returns the loss.
pub(crate) fn accumulate_gradient(
    params: &ModelParams,
    example: &LabeledWindow,
    grads: &mut [f64],
) -> Result<f64, ExtractorError> {
    let question = tokenize(&example.question);
    let input = encoder::EncoderInput::new(params, &question, &example.window)?;
    let cache = encoder::forward(params, input);
    let hidden = params.config().hidden;
    let enc = cache.encoded(hidden);
    let logits = heads_forward(params, &enc);
    let (value, d_logits) = loss::loss_with_grad(&logits, &example.label)?;
    let d_states = heads::heads_backward(params, &enc, &d_logits, grads);
    let mut d_out = vec![0.0; cache.out.len()];
    d_out[cache.input.window_offset * hidden..].copy_from_slice(&d_states);
    encoder::backward(params, &cache, d_out, grads);
    Ok(value)
}

/// Loss only, for finite differences and evaluation.
pub fn example_loss(params: &ModelParams, example: &LabeledWindow) -> Result<f64, ExtractorError> {
    let question = tokenize(&example.question);
    let enc = encode(params, &question, &example.window)?;
    loss(&heads_forward(params, &enc), &example.label)
}
