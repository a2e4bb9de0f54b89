use core::fmt;

use serde::{Deserialize, Serialize};

/// Shape of the encoder and heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    /// Transformer blocks (L).
    pub layers: usize,
    /// Hidden size (H).
    pub hidden: usize,
    /// Attention heads (A); must divide `hidden`.
    pub heads: usize,
    /// Inner width of the feed-forward sublayer.
    pub ffn_dim: usize,
    /// Rows in the hashed token-embedding table. Row 0 is the separator.
    pub vocab_hash_size: usize,
    pub max_window_len: usize,
    /// Question tokens beyond this are dropped.
    pub max_question_len: usize,
    /// Seed for parameter initialization.
    pub seed: u64,
}

impl EncoderConfig {
    /// L=2, H=16, A=2 with a 32-token window.
    pub fn toy() -> Self {
        EncoderConfig {
            layers: 2,
            hidden: 16,
            heads: 2,
            ffn_dim: 32,
            vocab_hash_size: 512,
            max_window_len: 32,
            max_question_len: 16,
            seed: 0,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.hidden / self.heads
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let counts = [
            ("layers", self.layers),
            ("hidden", self.hidden),
            ("heads", self.heads),
            ("ffn_dim", self.ffn_dim),
            ("max_window_len", self.max_window_len),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(ConfigError::ZeroCount(name));
        }
        if self.vocab_hash_size < 2 {
            return Err(ConfigError::ZeroCount("vocab_hash_size"));
        }
        if !self.hidden.is_multiple_of(self.heads) {
            return Err(ConfigError::HeadsDoNotDivideHidden { hidden: self.hidden, heads: self.heads });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    ZeroCount(&'static str),
    HeadsDoNotDivideHidden { hidden: usize, heads: usize },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::ZeroCount(name) => write!(f, "encoder config field `{name}` is too small"),
            ConfigError::HeadsDoNotDivideHidden { hidden, heads } => {
                write!(f, "hidden size {hidden} is not divisible by {heads} attention heads")
            }
        }
    }
}

impl core::error::Error for ConfigError {}
