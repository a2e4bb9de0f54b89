//! Joint span + verdict objective.
//!
//! ```text
//! loss = (BCE_start + BCE_end + CE_ynn) / 3
//! ```
//!
//! BCE terms average binary cross-entropy over all window positions, with
//! gold positions as positives. CE is `-log softmax(f_ynn)[gold]`. All terms
//! are computed from logits directly.

use alloc::vec;

use super::heads::{sigmoid, softmax3, HeadLogits};
use super::{AnswerLabel, ExtractorError};

/// log(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + libm::log1p(libm::exp(-x.abs()))
}

/// Compensated (Neumaier) summation.
fn sum_compensated(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + comp
}

fn bce_terms<'a>(
    logits: &'a [f64],
    positives: &'a alloc::collections::BTreeSet<usize>,
) -> impl Iterator<Item = f64> + 'a {
    logits.iter().enumerate().map(|(i, &x)| if positives.contains(&i) { softplus(-x) } else { softplus(x) })
}

fn cross_entropy(logits: [f64; 3], gold: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + libm::log(logits.iter().map(|&v| libm::exp(v - max)).sum::<f64>());
    lse - logits[gold]
}

pub fn loss(logits: &HeadLogits, label: &AnswerLabel) -> Result<f64, ExtractorError> {
    if logits.is_empty() {
        return Err(ExtractorError::EmptyWindow);
    }
    label.validate(logits.len())?;
    if logits.end.len() != logits.start.len() {
        return Err(ExtractorError::LengthMismatch { start: logits.start.len(), end: logits.end.len() });
    }
    // (sum_start / n + sum_end / n + ce) / 3, summed as one compensated series
    let scale = 1.0 / (3.0 * logits.len() as f64);
    let spans = bce_terms(&logits.start, &label.start_positions).chain(bce_terms(&logits.end, &label.end_positions));
    let ce = cross_entropy(logits.ynn, label.ynn.index());
    Ok(sum_compensated(spans.map(|t| t * scale).chain(core::iter::once(ce / 3.0))))
}

/// Loss and its gradient with respect to every logit.
pub(crate) fn loss_with_grad(logits: &HeadLogits, label: &AnswerLabel) -> Result<(f64, HeadLogits), ExtractorError> {
    let value = loss(logits, label)?;
    let n = logits.len() as f64;
    let mut grad = HeadLogits { start: vec![0.0; logits.len()], end: vec![0.0; logits.len()], ynn: [0.0; 3] };
    for (i, &x) in logits.start.iter().enumerate() {
        let y = if label.start_positions.contains(&i) { 1.0 } else { 0.0 };
        grad.start[i] = (sigmoid(x) - y) / (3.0 * n);
    }
    for (i, &x) in logits.end.iter().enumerate() {
        let y = if label.end_positions.contains(&i) { 1.0 } else { 0.0 };
        grad.end[i] = (sigmoid(x) - y) / (3.0 * n);
    }
    let p = softmax3(logits.ynn);
    for c in 0..3 {
        let y = if c == label.ynn.index() { 1.0 } else { 0.0 };
        grad.ynn[c] = (p[c] - y) / 3.0;
    }
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::Ynn;
    use alloc::collections::BTreeSet;
    use alloc::vec::Vec;
    use rand::{Rng, SeedableRng};

    fn label(starts: &[usize], ends: &[usize], ynn: Ynn) -> AnswerLabel {
        AnswerLabel {
            start_positions: starts.iter().copied().collect(),
            end_positions: ends.iter().copied().collect(),
            ynn,
        }
    }

    #[test]
    fn zero_logits_fixed_point() {
        let logits = HeadLogits { start: vec![0.0; 7], end: vec![0.0; 7], ynn: [0.0; 3] };
        let expected = (2.0 * core::f64::consts::LN_2 + libm::log(3.0)) / 3.0;
        for l in [label(&[1], &[3], Ynn::Yes), label(&[], &[], Ynn::None), label(&[0, 4], &[2, 6], Ynn::No)] {
            assert!((loss(&logits, &l).unwrap() - expected).abs() < 1e-12);
        }
        assert!((expected - 0.8283).abs() < 1e-4);
    }

    #[test]
    fn saturated_logits_give_zero_loss() {
        let l = label(&[1], &[2], Ynn::No);
        let mut start = vec![-30.0; 4];
        start[1] = 30.0;
        let mut end = vec![-30.0; 4];
        end[2] = 30.0;
        let logits = HeadLogits { start, end, ynn: [-30.0, 30.0, -30.0] };
        assert!(loss(&logits, &l).unwrap() < 1e-9);
    }

    /// Straight scalar recomputation with naive log/sigmoid/exp.
    fn naive_loss(
        start: &[f64],
        end: &[f64],
        ynn: [f64; 3],
        s: &BTreeSet<usize>,
        e: &BTreeSet<usize>,
        gold: usize,
    ) -> f64 {
        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        let bce = |xs: &[f64], pos: &BTreeSet<usize>| {
            let mut acc = 0.0;
            for (i, &x) in xs.iter().enumerate() {
                let p = sig(x);
                acc += if pos.contains(&i) { -p.ln() } else { -(1.0 - p).ln() };
            }
            acc / xs.len() as f64
        };
        let z: f64 = ynn.iter().map(|v| v.exp()).sum();
        let ce = -(ynn[gold].exp() / z).ln();
        (bce(start, s) + bce(end, e) + ce) / 3.0
    }

    #[test]
    fn matches_scalar_recomputation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let start: Vec<f64> = (0..8).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let end: Vec<f64> = (0..8).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let ynn = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let s = rng.gen_range(0..8usize);
            let e = rng.gen_range(s..8usize);
            let yn = [Ynn::Yes, Ynn::No, Ynn::None][rng.gen_range(0..3usize)];
            let l = label(&[s], &[e], yn);
            let got = loss(&HeadLogits { start: start.clone(), end: end.clone(), ynn }, &l).unwrap();
            let want = naive_loss(&start, &end, ynn, &l.start_positions, &l.end_positions, yn.index());
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn logit_gradient_matches_finite_difference() {
        let l = label(&[1], &[2], Ynn::Yes);
        let logits = HeadLogits { start: vec![0.3, -1.2, 2.0], end: vec![1.1, 0.2, -0.4], ynn: [0.5, -0.3, 1.7] };
        let (_, g) = loss_with_grad(&logits, &l).unwrap();
        let eps = 1e-6;
        let f = |lg: &HeadLogits| loss(lg, &l).unwrap();
        for i in 0..3 {
            let mut p = logits.clone();
            p.start[i] += eps;
            let mut m = logits.clone();
            m.start[i] -= eps;
            assert!(((f(&p) - f(&m)) / (2.0 * eps) - g.start[i]).abs() < 1e-9);
        }
        for c in 0..3 {
            let mut p = logits.clone();
            p.ynn[c] += eps;
            let mut m = logits.clone();
            m.ynn[c] -= eps;
            assert!(((f(&p) - f(&m)) / (2.0 * eps) - g.ynn[c]).abs() < 1e-9);
        }
    }

    #[test]
    fn label_errors() {
        let logits = HeadLogits { start: vec![0.0; 3], end: vec![0.0; 3], ynn: [0.0; 3] };
        assert!(matches!(loss(&logits, &label(&[3], &[3], Ynn::Yes)), Err(ExtractorError::LabelOutOfRange { .. })));
        assert!(matches!(loss(&logits, &label(&[2], &[1], Ynn::Yes)), Err(ExtractorError::InvalidLabel(_))));
        let bad = HeadLogits { start: vec![0.0; 3], end: vec![0.0; 2], ynn: [0.0; 3] };
        assert!(loss(&bad, &label(&[], &[], Ynn::None)).is_err());
    }

    #[test]
    fn relabeling_classes_preserves_loss() {
        let start = vec![0.4, -0.2, 1.0];
        let end = vec![-0.1, 0.9, 0.3];
        let l = label(&[0], &[1], Ynn::No);
        let a = loss(&HeadLogits { start: start.clone(), end: end.clone(), ynn: [0.1, 0.7, -0.5] }, &l).unwrap();
        // swap yes <-> no in both logits and label
        let l2 = label(&[0], &[1], Ynn::Yes);
        let b = loss(&HeadLogits { start, end, ynn: [0.7, 0.1, -0.5] }, &l2).unwrap();
        assert!((a - b).abs() < 1e-15);
    }
}
