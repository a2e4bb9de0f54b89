//! Flat parameter storage. Every tensor is a range into one `Vec<f64>`, so
//! gradients, optimizer state, and checkpoints share the same layout.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ConfigError, EncoderConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSlots {
    pub wq: Range<usize>,
    pub bq: Range<usize>,
    /// Keys have no bias: softmax is invariant to it.
    pub wk: Range<usize>,
    pub wv: Range<usize>,
    pub bv: Range<usize>,
    pub wo: Range<usize>,
    pub bo: Range<usize>,
    pub ln1_gain: Range<usize>,
    pub ln1_bias: Range<usize>,
    pub w1: Range<usize>,
    pub b1: Range<usize>,
    pub w2: Range<usize>,
    pub b2: Range<usize>,
    pub ln2_gain: Range<usize>,
    pub ln2_bias: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub token_embedding: Range<usize>,
    pub segment_embedding: Range<usize>,
    pub layers: Vec<LayerSlots>,
    pub start_weight: Range<usize>,
    pub start_bias: Range<usize>,
    pub end_weight: Range<usize>,
    pub end_bias: Range<usize>,
    /// 3 x H, rows ordered yes, no, none.
    pub ynn_weight: Range<usize>,
    pub ynn_bias: Range<usize>,
    pub total: usize,
}

struct Cursor(usize);

impl Cursor {
    fn next(&mut self, n: usize) -> Range<usize> {
        let r = self.0..self.0 + n;
        self.0 += n;
        r
    }
}

impl Layout {
    pub fn new(cfg: &EncoderConfig) -> Self {
        let (h, f) = (cfg.hidden, cfg.ffn_dim);
        let mut c = Cursor(0);
        let token_embedding = c.next(cfg.vocab_hash_size * h);
        let segment_embedding = c.next(2 * h);
        let layers = (0..cfg.layers)
            .map(|_| LayerSlots {
                wq: c.next(h * h),
                bq: c.next(h),
                wk: c.next(h * h),
                wv: c.next(h * h),
                bv: c.next(h),
                wo: c.next(h * h),
                bo: c.next(h),
                ln1_gain: c.next(h),
                ln1_bias: c.next(h),
                w1: c.next(h * f),
                b1: c.next(f),
                w2: c.next(f * h),
                b2: c.next(h),
                ln2_gain: c.next(h),
                ln2_bias: c.next(h),
            })
            .collect();
        let start_weight = c.next(h);
        let start_bias = c.next(1);
        let end_weight = c.next(h);
        let end_bias = c.next(1);
        let ynn_weight = c.next(3 * h);
        let ynn_bias = c.next(3);
        Layout {
            token_embedding,
            segment_embedding,
            layers,
            start_weight,
            start_bias,
            end_weight,
            end_bias,
            ynn_weight,
            ynn_bias,
            total: c.0,
        }
    }

    /// All head parameters; they are stored last.
    pub fn heads(&self) -> Range<usize> {
        self.start_weight.start..self.total
    }
}

/// Encoder and head parameters (θ).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    config: EncoderConfig,
    layout: Layout,
    values: Vec<f64>,
}

fn fill_uniform(rng: &mut ChaCha8Rng, out: &mut [f64], limit: f64) {
    for v in out {
        *v = rng.gen_range(-limit..limit);
    }
}

fn xavier(fan_in: usize, fan_out: usize) -> f64 {
    libm::sqrt(6.0 / (fan_in + fan_out) as f64)
}

impl ModelParams {
    /// Seeded random initialization: Xavier-uniform matrices, unit layer-norm
    /// gains, zero biases.
    pub fn init(config: EncoderConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let layout = Layout::new(&config);
        let mut values = vec![0.0; layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (h, f) = (config.hidden, config.ffn_dim);
        fill_uniform(&mut rng, &mut values[layout.token_embedding.clone()], 1.0);
        fill_uniform(&mut rng, &mut values[layout.segment_embedding.clone()], 0.1);
        for l in &layout.layers {
            for w in [&l.wq, &l.wk, &l.wv, &l.wo] {
                fill_uniform(&mut rng, &mut values[w.clone()], xavier(h, h));
            }
            fill_uniform(&mut rng, &mut values[l.w1.clone()], xavier(h, f));
            fill_uniform(&mut rng, &mut values[l.w2.clone()], xavier(f, h));
            values[l.ln1_gain.clone()].fill(1.0);
            values[l.ln2_gain.clone()].fill(1.0);
        }
        fill_uniform(&mut rng, &mut values[layout.start_weight.clone()], xavier(h, 1));
        fill_uniform(&mut rng, &mut values[layout.end_weight.clone()], xavier(h, 1));
        fill_uniform(&mut rng, &mut values[layout.ynn_weight.clone()], xavier(h, 3));
        Ok(ModelParams { config, layout, values })
    }

    /// Wraps raw values; `None` if the length does not match the layout.
    pub fn from_values(config: EncoderConfig, values: Vec<f64>) -> Option<Self> {
        config.validate().ok()?;
        let layout = Layout::new(&config);
        (values.len() == layout.total).then_some(ModelParams { config, layout, values })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn slice(&self, r: &Range<usize>) -> &[f64] {
        &self.values[r.clone()]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
