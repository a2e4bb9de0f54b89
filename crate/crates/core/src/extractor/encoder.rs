//! Transformer encoder stand-in.
//!
//! The input sequence is `question tokens | separator | window tokens`. Each
//! position gets a hashed token embedding, a segment embedding (0 for the
//! question and separator, 1 for the window) and a sinusoidal position
//! encoding, then passes through post-norm blocks:
//!
//! ```text
//! h = LayerNorm(x + MultiHeadAttention(x))
//! y = LayerNorm(h + W2 gelu(W1 h + b1) + b2)
//! ```
//!
//! Only the window positions are exposed as per-token states; the pooled
//! state is their mean.

use alloc::vec;
use alloc::vec::Vec;

use super::linalg::{
    add_position, affine, affine_backward, gelu, gelu_grad, layer_norm, layer_norm_backward, softmax_in_place,
    LayerNormCache,
};
use super::params::ModelParams;
use super::ExtractorError;
use crate::corpus::{Token, Window};
use crate::hash::fnv1a64;

pub(crate) const SEPARATOR_ROW: usize = 0;

/// Embedding row for a token surface. Row 0 is reserved for the separator.
pub fn token_row(surface: &str, vocab_hash_size: usize) -> usize {
    1 + (fnv1a64(surface.as_bytes()) % (vocab_hash_size as u64 - 1)) as usize
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct EncoderInput {
    pub(crate) rows: Vec<usize>,
    pub(crate) segments: Vec<usize>,
    /// Index of the first window token in the sequence.
    pub(crate) window_offset: usize,
}

impl EncoderInput {
    pub(crate) fn new(params: &ModelParams, question: &[Token], window: &Window) -> Result<Self, ExtractorError> {
        let cfg = params.config();
        if window.len() > cfg.max_window_len {
            return Err(ExtractorError::WindowTooLong { len: window.len(), max: cfg.max_window_len });
        }
        if window.is_empty() {
            return Err(ExtractorError::EmptyWindow);
        }
        let q = &question[..question.len().min(cfg.max_question_len)];
        let v = cfg.vocab_hash_size;
        let mut rows: Vec<usize> = q.iter().map(|t| token_row(&t.surface, v)).collect();
        rows.push(SEPARATOR_ROW);
        let window_offset = rows.len();
        rows.extend(window.tokens.iter().map(|t| token_row(&t.surface, v)));
        let mut segments = vec![0; window_offset];
        segments.resize(rows.len(), 1);
        Ok(EncoderInput { rows, segments, window_offset })
    }

    pub(crate) fn len(&self) -> usize {
        self.rows.len()
    }

    pub(crate) fn window_len(&self) -> usize {
        self.rows.len() - self.window_offset
    }
}

/// Encoder output for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedWindow {
    /// `len x hidden`, row-major.
    pub states: Vec<f64>,
    pub pooled: Vec<f64>,
    pub hidden: usize,
}

impl EncodedWindow {
    pub fn len(&self) -> usize {
        self.states.len() / self.hidden
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.hidden..(i + 1) * self.hidden]
    }
}

pub(crate) struct LayerCache {
    x: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    /// heads x T x T attention weights.
    probs: Vec<f64>,
    ctx: Vec<f64>,
    ln1: LayerNormCache,
    h1: Vec<f64>,
    pre: Vec<f64>,
    act: Vec<f64>,
    ln2: LayerNormCache,
}

pub(crate) struct ForwardCache {
    pub(crate) input: EncoderInput,
    layers: Vec<LayerCache>,
    /// Final hidden states for the whole sequence, `T x H`.
    pub(crate) out: Vec<f64>,
}

fn embed(params: &ModelParams, input: &EncoderInput) -> Vec<f64> {
    let h = params.config().hidden;
    let lay = params.layout();
    let tok = params.slice(&lay.token_embedding);
    let seg = params.slice(&lay.segment_embedding);
    let mut x = vec![0.0; input.len() * h];
    for (t, (&row, &s)) in input.rows.iter().zip(&input.segments).enumerate() {
        let dst = &mut x[t * h..(t + 1) * h];
        for c in 0..h {
            dst[c] = tok[row * h + c] + seg[s * h + c];
        }
        add_position(dst, t);
    }
    x
}

pub(crate) fn forward(params: &ModelParams, input: EncoderInput) -> ForwardCache {
    let cfg = *params.config();
    let (t_len, h, f, heads, dh) = (input.len(), cfg.hidden, cfg.ffn_dim, cfg.heads, cfg.head_dim());
    let scale = 1.0 / libm::sqrt(dh as f64);
    let mut x = embed(params, &input);
    let mut layers = Vec::with_capacity(cfg.layers);
    for slots in &params.layout().layers {
        let p = |r: &core::ops::Range<usize>| params.slice(r);
        let q = affine(&x, p(&slots.wq), p(&slots.bq), t_len, h, h);
        let k = affine(&x, p(&slots.wk), &vec![0.0; h], t_len, h, h);
        let v = affine(&x, p(&slots.wv), p(&slots.bv), t_len, h, h);
        let mut probs = vec![0.0; heads * t_len * t_len];
        let mut ctx = vec![0.0; t_len * h];
        for a in 0..heads {
            let off = a * dh;
            for i in 0..t_len {
                let row = &mut probs[(a * t_len + i) * t_len..(a * t_len + i + 1) * t_len];
                let qi = &q[i * h + off..i * h + off + dh];
                for (j, s) in row.iter_mut().enumerate() {
                    let kj = &k[j * h + off..j * h + off + dh];
                    *s = qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() * scale;
                }
                softmax_in_place(row);
                let ci = &mut ctx[i * h + off..i * h + off + dh];
                for (j, &pij) in row.iter().enumerate() {
                    for (c, vv) in ci.iter_mut().zip(&v[j * h + off..j * h + off + dh]) {
                        *c += pij * vv;
                    }
                }
            }
        }
        let attn = affine(&ctx, p(&slots.wo), p(&slots.bo), t_len, h, h);
        let res1: Vec<f64> = x.iter().zip(&attn).map(|(a, b)| a + b).collect();
        let (h1, ln1) = layer_norm(&res1, p(&slots.ln1_gain), p(&slots.ln1_bias), t_len, h);
        let pre = affine(&h1, p(&slots.w1), p(&slots.b1), t_len, h, f);
        let act: Vec<f64> = pre.iter().map(|&z| gelu(z)).collect();
        let ffn = affine(&act, p(&slots.w2), p(&slots.b2), t_len, f, h);
        let res2: Vec<f64> = h1.iter().zip(&ffn).map(|(a, b)| a + b).collect();
        let (y, ln2) = layer_norm(&res2, p(&slots.ln2_gain), p(&slots.ln2_bias), t_len, h);
        layers.push(LayerCache { x, q, k, v, probs, ctx, ln1, h1, pre, act, ln2 });
        x = y;
    }
    ForwardCache { input, layers, out: x }
}

impl ForwardCache {
    pub(crate) fn encoded(&self, hidden: usize) -> EncodedWindow {
        let start = self.input.window_offset * hidden;
        let states = self.out[start..].to_vec();
        let n = self.input.window_len();
        let mut pooled = vec![0.0; hidden];
        for i in 0..n {
            for (p, s) in pooled.iter_mut().zip(&states[i * hidden..(i + 1) * hidden]) {
                *p += s;
            }
        }
        for p in &mut pooled {
            *p /= n as f64;
        }
        EncodedWindow { states, pooled, hidden }
    }
}

/// Backpropagates `d_out` (gradient w.r.t. the final `T x H` states) through
/// the encoder, accumulating into `grads` (same layout as the parameters).
pub(crate) fn backward(params: &ModelParams, cache: &ForwardCache, d_out: Vec<f64>, grads: &mut [f64]) {
    let cfg = *params.config();
    let (t_len, h, f, heads, dh) = (cache.input.len(), cfg.hidden, cfg.ffn_dim, cfg.heads, cfg.head_dim());
    let scale = 1.0 / libm::sqrt(dh as f64);
    let lay = params.layout();
    let mut dy = d_out;
    for (slots, lc) in lay.layers.iter().zip(&cache.layers).rev() {
        let p = |r: &core::ops::Range<usize>| params.slice(r);

        let (g2, b2) = split_two(grads, &slots.ln2_gain, &slots.ln2_bias);
        let d_res2 = layer_norm_backward(&lc.ln2, p(&slots.ln2_gain), &dy, t_len, h, g2, b2);
        let (dw2, db2) = split_two(grads, &slots.w2, &slots.b2);
        let d_act = affine_backward(&lc.act, p(&slots.w2), &d_res2, t_len, f, h, dw2, db2);
        let d_pre: Vec<f64> = d_act.iter().zip(&lc.pre).map(|(d, &z)| d * gelu_grad(z)).collect();
        let (dw1, db1) = split_two(grads, &slots.w1, &slots.b1);
        let d_h1_ffn = affine_backward(&lc.h1, p(&slots.w1), &d_pre, t_len, h, f, dw1, db1);
        let d_h1: Vec<f64> = d_res2.iter().zip(&d_h1_ffn).map(|(a, b)| a + b).collect();

        let (g1, b1) = split_two(grads, &slots.ln1_gain, &slots.ln1_bias);
        let d_res1 = layer_norm_backward(&lc.ln1, p(&slots.ln1_gain), &d_h1, t_len, h, g1, b1);
        let (dwo, dbo) = split_two(grads, &slots.wo, &slots.bo);
        let d_ctx = affine_backward(&lc.ctx, p(&slots.wo), &d_res1, t_len, h, h, dwo, dbo);

        let mut dq = vec![0.0; t_len * h];
        let mut dk = vec![0.0; t_len * h];
        let mut dv = vec![0.0; t_len * h];
        let mut dp = vec![0.0; t_len];
        for a in 0..heads {
            let off = a * dh;
            for i in 0..t_len {
                let pr = &lc.probs[(a * t_len + i) * t_len..(a * t_len + i + 1) * t_len];
                let dci = &d_ctx[i * h + off..i * h + off + dh];
                for j in 0..t_len {
                    let vj = &lc.v[j * h + off..j * h + off + dh];
                    dp[j] = dci.iter().zip(vj).map(|(a, b)| a * b).sum();
                    for (dvv, dc) in dv[j * h + off..j * h + off + dh].iter_mut().zip(dci) {
                        *dvv += pr[j] * dc;
                    }
                }
                let dot: f64 = dp.iter().zip(pr).map(|(a, b)| a * b).sum();
                for j in 0..t_len {
                    let ds = pr[j] * (dp[j] - dot) * scale;
                    if ds == 0.0 {
                        continue;
                    }
                    for c in 0..dh {
                        dq[i * h + off + c] += ds * lc.k[j * h + off + c];
                        dk[j * h + off + c] += ds * lc.q[i * h + off + c];
                    }
                }
            }
        }
        let mut dx = d_res1;
        for (d, w, b) in [(&dq, &slots.wq, &slots.bq), (&dv, &slots.wv, &slots.bv)] {
            let (dw, db) = split_two(grads, w, b);
            let part = affine_backward(&lc.x, p(w), d, t_len, h, h, dw, db);
            for (acc, v) in dx.iter_mut().zip(&part) {
                *acc += v;
            }
        }
        let mut unused_bias = vec![0.0; h];
        let part =
            affine_backward(&lc.x, p(&slots.wk), &dk, t_len, h, h, &mut grads[slots.wk.clone()], &mut unused_bias);
        for (acc, v) in dx.iter_mut().zip(&part) {
            *acc += v;
        }
        dy = dx;
    }

    let (tok, seg) = split_two(grads, &lay.token_embedding, &lay.segment_embedding);
    for (t, (&row, &s)) in cache.input.rows.iter().zip(&cache.input.segments).enumerate() {
        let g = &dy[t * h..(t + 1) * h];
        for c in 0..h {
            tok[row * h + c] += g[c];
            seg[s * h + c] += g[c];
        }
    }
}

/// Two disjoint mutable sub-slices; `first` must lie before `second`.
fn split_two<'a>(
    buf: &'a mut [f64],
    first: &core::ops::Range<usize>,
    second: &core::ops::Range<usize>,
) -> (&'a mut [f64], &'a mut [f64]) {
    debug_assert!(first.end <= second.start);
    let (lo, hi) = buf.split_at_mut(second.start);
    (&mut lo[first.clone()], &mut hi[..second.len()])
}

/// Runs the encoder over `question | window`.
pub fn encode(params: &ModelParams, question: &[Token], window: &Window) -> Result<EncodedWindow, ExtractorError> {
    let input = EncoderInput::new(params, question, window)?;
    Ok(forward(params, input).encoded(params.config().hidden))
}
