//! Output heads and their probabilities.
//!
//! Start and end heads are per-token dense layers read through a sigmoid, so
//! any number of positions can fire. The verdict head is a 3-way dense layer
//! over the pooled state, read through a softmax.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::encoder::EncodedWindow;
use super::params::ModelParams;

/// Raw head outputs for one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadLogits {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    /// Ordered yes, no, none.
    pub ynn: [f64; 3],
}

impl HeadLogits {
    pub fn len(&self) -> usize {
        self.start.len()
    }

    pub fn is_empty(&self) -> bool {
        self.start.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probabilities {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub ynn: [f64; 3],
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn heads_forward(params: &ModelParams, enc: &EncodedWindow) -> HeadLogits {
    let lay = params.layout();
    let ws = params.slice(&lay.start_weight);
    let bs = params.slice(&lay.start_bias)[0];
    let we = params.slice(&lay.end_weight);
    let be = params.slice(&lay.end_bias)[0];
    let wy = params.slice(&lay.ynn_weight);
    let by = params.slice(&lay.ynn_bias);
    let h = enc.hidden;
    let n = enc.len();
    let start = (0..n).map(|i| dot(ws, enc.state(i)) + bs).collect();
    let end = (0..n).map(|i| dot(we, enc.state(i)) + be).collect();
    let mut ynn = [0.0; 3];
    for (c, y) in ynn.iter_mut().enumerate() {
        *y = dot(&wy[c * h..(c + 1) * h], &enc.pooled) + by[c];
    }
    HeadLogits { start, end, ynn }
}

/// Accumulates head-parameter gradients and returns the gradient with
/// respect to the per-token states (`n x H`), pooled contribution included.
pub(crate) fn heads_backward(params: &ModelParams, enc: &EncodedWindow, d: &HeadLogits, grads: &mut [f64]) -> Vec<f64> {
    let lay = params.layout();
    let h = enc.hidden;
    let n = enc.len();
    let ws = params.slice(&lay.start_weight);
    let we = params.slice(&lay.end_weight);
    let wy = params.slice(&lay.ynn_weight);

    let mut d_states = vec![0.0; n * h];
    let mut d_pooled = vec![0.0; h];
    for (c, &g) in d.ynn.iter().enumerate() {
        grads[lay.ynn_bias.start + c] += g;
        for k in 0..h {
            grads[lay.ynn_weight.start + c * h + k] += g * enc.pooled[k];
            d_pooled[k] += g * wy[c * h + k];
        }
    }
    for i in 0..n {
        let s = enc.state(i);
        let (gs, ge) = (d.start[i], d.end[i]);
        grads[lay.start_bias.start] += gs;
        grads[lay.end_bias.start] += ge;
        for k in 0..h {
            grads[lay.start_weight.start + k] += gs * s[k];
            grads[lay.end_weight.start + k] += ge * s[k];
            d_states[i * h + k] = gs * ws[k] + ge * we[k] + d_pooled[k] / n as f64;
        }
    }
    d_states
}

/// Logistic function, evaluated without overflow for any finite input.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

pub fn softmax3(logits: [f64; 3]) -> [f64; 3] {
    let mut p = logits;
    super::linalg::softmax_in_place(&mut p);
    p
}

pub fn probabilities(logits: &HeadLogits) -> Probabilities {
    Probabilities {
        start: logits.start.iter().map(|&x| sigmoid(x)).collect(),
        end: logits.end.iter().map(|&x| sigmoid(x)).collect(),
        ynn: softmax3(logits.ynn),
    }
}
