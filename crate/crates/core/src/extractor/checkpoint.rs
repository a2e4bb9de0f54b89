//! Binary checkpoint format.
//!
//! ```text
//! magic "OBQACKPT" | version u32
//! layers u64 | hidden u64 | heads u64 | ffn_dim u64 | vocab_hash_size u64
//! max_window_len u64 | max_question_len u64 | seed u64
//! count u64 | f64 * count        (layout order, little-endian bit patterns)
//! ```

use alloc::vec::Vec;
use core::fmt;

use super::{EncoderConfig, ModelParams};
use crate::bytes::{Reader, Truncated, Writer};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"OBQACKPT";
pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeCheckpointError {
    BadMagic,
    UnsupportedVersion(u32),
    Truncated { offset: usize },
    InvalidConfig,
    ParameterCount { expected: usize, found: usize },
    NonFinite { index: usize },
    TrailingBytes { offset: usize },
}

impl fmt::Display for DecodeCheckpointError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BadMagic => f.write_str("not a checkpoint file (bad magic)"),
            Self::UnsupportedVersion(v) => write!(f, "unsupported checkpoint format version {v}"),
            Self::Truncated { offset } => write!(f, "checkpoint truncated at byte {offset}"),
            Self::InvalidConfig => f.write_str("checkpoint holds an invalid encoder config"),
            Self::ParameterCount { expected, found } => {
                write!(f, "checkpoint has {found} parameters, config implies {expected}")
            }
            Self::NonFinite { index } => write!(f, "parameter {index} is not finite"),
            Self::TrailingBytes { offset } => write!(f, "unexpected bytes after offset {offset}"),
        }
    }
}

impl core::error::Error for DecodeCheckpointError {}

impl From<Truncated> for DecodeCheckpointError {
    fn from(t: Truncated) -> Self {
        Self::Truncated { offset: t.0 }
    }
}

impl ModelParams {
    pub fn to_bytes(&self) -> Vec<u8> {
        let c = self.config();
        let mut w = Writer::default();
        w.bytes(CHECKPOINT_MAGIC);
        w.u32(CHECKPOINT_FORMAT_VERSION);
        for v in [c.layers, c.hidden, c.heads, c.ffn_dim, c.vocab_hash_size, c.max_window_len, c.max_question_len] {
            w.u64(v as u64);
        }
        w.u64(c.seed);
        w.u64(self.len() as u64);
        for &v in self.values() {
            w.f64(v);
        }
        w.buf
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, DecodeCheckpointError> {
        let mut r = Reader::new(data);
        if r.take(8).map_err(|_| DecodeCheckpointError::BadMagic)? != CHECKPOINT_MAGIC {
            return Err(DecodeCheckpointError::BadMagic);
        }
        let version = r.u32()?;
        if version != CHECKPOINT_FORMAT_VERSION {
            return Err(DecodeCheckpointError::UnsupportedVersion(version));
        }
        let mut dims = [0usize; 7];
        for d in &mut dims {
            *d = usize::try_from(r.u64()?).map_err(|_| DecodeCheckpointError::InvalidConfig)?;
        }
        let config = EncoderConfig {
            layers: dims[0],
            hidden: dims[1],
            heads: dims[2],
            ffn_dim: dims[3],
            vocab_hash_size: dims[4],
            max_window_len: dims[5],
            max_question_len: dims[6],
            seed: r.u64()?,
        };
        config.validate().map_err(|_| DecodeCheckpointError::InvalidConfig)?;
        let expected = super::Layout::new(&config).total;
        let found = r.u64()? as usize;
        if found != expected {
            return Err(DecodeCheckpointError::ParameterCount { expected, found });
        }
        let mut values = Vec::with_capacity(found);
        for index in 0..found {
            let v = r.f64()?;
            if !v.is_finite() {
                return Err(DecodeCheckpointError::NonFinite { index });
            }
            values.push(v);
        }
        if !r.is_at_end() {
            return Err(DecodeCheckpointError::TrailingBytes { offset: r.pos() });
        }
        Ok(ModelParams::from_values(config, values).expect("length checked against layout"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_bit_exact() {
        let p = ModelParams::init(EncoderConfig { seed: 3, ..EncoderConfig::toy() }).unwrap();
        let bytes = p.to_bytes();
        let back = ModelParams::from_bytes(&bytes).unwrap();
        assert_eq!(back.config(), p.config());
        assert!(back.values().iter().zip(p.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn rejects_damage() {
        let bytes = ModelParams::init(EncoderConfig::toy()).unwrap().to_bytes();
        assert_eq!(ModelParams::from_bytes(b"OBQAIDX\0"), Err(DecodeCheckpointError::BadMagic));
        assert!(matches!(ModelParams::from_bytes(&bytes[..100]), Err(DecodeCheckpointError::Truncated { .. })));
        let mut v = bytes.clone();
        let last = v.len() - 8;
        v[last..].copy_from_slice(&f64::NAN.to_bits().to_le_bytes());
        assert!(matches!(ModelParams::from_bytes(&v), Err(DecodeCheckpointError::NonFinite { .. })));
        let mut v = bytes;
        v[12] = 0; // layers = 0 (low byte of the first dim)
        assert_eq!(ModelParams::from_bytes(&v), Err(DecodeCheckpointError::InvalidConfig));
    }
}
