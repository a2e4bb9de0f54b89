//! Mini-batch training with AdamW (decoupled weight decay).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{accumulate_gradient, ConfigError, EncoderConfig, ExtractorError, ModelParams};
use crate::datasets::LabeledWindow;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Seed for the per-epoch shuffle.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 3,
            batch_size: 8,
            learning_rate: 1e-3,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Mean example loss per epoch, measured during the epoch.
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    NoExamples,
    ZeroBatchSize,
    Config(ConfigError),
    Example { index: usize, source: ExtractorError },
    NonFiniteLoss { epoch: usize, step: usize, learning_rate: f64 },
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::NoExamples => f.write_str("training needs at least one example"),
            TrainError::ZeroBatchSize => f.write_str("batch size must be at least 1"),
            TrainError::Config(e) => write!(f, "{e}"),
            TrainError::Example { index, source } => write!(f, "training example {index}: {source}"),
            TrainError::NonFiniteLoss { epoch, step, learning_rate } => write!(
                f,
                "loss became non-finite at epoch {epoch}, step {step}; learning rate {learning_rate} is probably too high"
            ),
        }
    }
}

impl core::error::Error for TrainError {}

struct AdamW {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl AdamW {
    fn new(n: usize) -> Self {
        AdamW { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, theta: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
        self.t += 1;
        let bc1 = 1.0 - libm::pow(cfg.beta1, f64::from(self.t));
        let bc2 = 1.0 - libm::pow(cfg.beta2, f64::from(self.t));
        let lr = cfg.learning_rate;
        for i in 0..theta.len() {
            let g = grad[i];
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g;
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            theta[i] -= lr * (m_hat / (libm::sqrt(v_hat) + cfg.adam_eps) + cfg.weight_decay * theta[i]);
        }
    }
}

/// Initializes parameters from `encoder` and trains them.
pub fn train(
    examples: &[LabeledWindow],
    encoder: EncoderConfig,
    cfg: &TrainConfig,
    progress: impl FnMut(usize, f64),
) -> Result<TrainOutcome, TrainError> {
    let params = ModelParams::init(encoder).map_err(TrainError::Config)?;
    train_from(params, examples, cfg, progress)
}

/// Trains starting from existing parameters. `progress` is called with
/// `(epoch, mean loss)` after every epoch.
pub fn train_from(
    mut params: ModelParams,
    examples: &[LabeledWindow],
    cfg: &TrainConfig,
    mut progress: impl FnMut(usize, f64),
) -> Result<TrainOutcome, TrainError> {
    if examples.is_empty() {
        return Err(TrainError::NoExamples);
    }
    if cfg.batch_size == 0 {
        return Err(TrainError::ZeroBatchSize);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = AdamW::new(params.len());
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut grads = vec![0.0; params.len()];
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut step = 0;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grads.fill(0.0);
            let mut batch_loss = 0.0;
            for &i in batch {
                batch_loss += accumulate_gradient(&params, &examples[i], &mut grads)
                    .map_err(|source| TrainError::Example { index: i, source })?;
            }
            if !batch_loss.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch, step, learning_rate: cfg.learning_rate });
            }
            let scale = 1.0 / batch.len() as f64;
            for g in &mut grads {
                *g *= scale;
            }
            opt.step(params.values_mut(), &grads, cfg);
            epoch_loss += batch_loss;
            step += 1;
        }
        let mean = epoch_loss / examples.len() as f64;
        history.push(mean);
        progress(epoch, mean);
    }
    if !params.is_finite() {
        return Err(TrainError::NonFiniteLoss { epoch: cfg.epochs, step, learning_rate: cfg.learning_rate });
    }
    Ok(TrainOutcome { params, loss_history: history })
}
