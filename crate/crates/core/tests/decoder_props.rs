use obqa_core::corpus::window_tokens;
use obqa_core::decoder::{decode_document, decode_window, select_answer, SpanCandidate, WindowResult};
use obqa_core::{tokenize, WindowConfig};
use proptest::prelude::*;

/// Every valid (start, end) pair in lexicographic order, accepted when
/// neither endpoint is taken yet.
fn oracle(ps: &[f64], pe: &[f64], tau: f64, max_len: usize) -> Vec<(usize, usize, bool)> {
    let n = ps.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if j >= i && j - i < max_len && ps[i] > tau && pe[j] > tau {
                pairs.push((i, j));
            }
        }
    }
    let mut used_s = vec![false; n];
    let mut used_e = vec![false; n];
    let mut out = Vec::new();
    for (i, j) in pairs {
        if !used_s[i] && !used_e[j] {
            used_s[i] = true;
            used_e[j] = true;
            out.push((i, j, false));
        }
    }
    if out.is_empty() {
        let mut all: Vec<(usize, usize)> =
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| j >= i && j - i < max_len).collect();
        all.sort_by(|a, b| (ps[b.0] + pe[b.1]).partial_cmp(&(ps[a.0] + pe[a.1])).unwrap().then(a.cmp(b)));
        out.push((all[0].0, all[0].1, true));
    }
    out
}

fn probs(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1..=max).prop_flat_map(|n| {
        let grid = prop::sample::select(vec![0.05, 0.2, 0.45, 0.5, 0.55, 0.7, 0.9, 0.99]);
        (prop::collection::vec(grid.clone(), n), prop::collection::vec(grid, n))
    })
}

proptest! {
    #[test]
    fn matches_exhaustive_enumeration((ps, pe) in probs(12), tau in prop::sample::select(vec![0.3, 0.5, 0.8]), max_len in 1usize..6) {
        let got: Vec<_> = decode_window(&ps, &pe, tau, max_len).unwrap().iter().map(|s| (s.start, s.end, s.fallback)).collect();
        prop_assert_eq!(got, oracle(&ps, &pe, tau, max_len));
    }

    #[test]
    fn raising_threshold_never_adds_spans((ps, pe) in probs(12), max_len in 1usize..8) {
        let count = |t: f64| decode_window(&ps, &pe, t, max_len).unwrap().iter().filter(|s| !s.fallback).count();
        let taus = [0.1, 0.3, 0.5, 0.6, 0.8, 0.95];
        for w in taus.windows(2) {
            prop_assert!(count(w[1]) <= count(w[0]));
        }
    }

    #[test]
    fn spans_respect_invariants((ps, pe) in probs(12), max_len in 1usize..8) {
        for s in decode_window(&ps, &pe, 0.5, max_len).unwrap() {
            prop_assert!(s.start <= s.end && s.end - s.start < max_len);
            prop_assert!((s.score - (ps[s.start] + pe[s.end]) / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn always_answers_and_slices_back(words in prop::collection::vec("[a-z]{1,6}", 1..40), seed in any::<u64>()) {
        let text = words.join(" ");
        let tokens = tokenize(&text);
        let windows = window_tokens("d", &tokens, &WindowConfig { max_window_len: 8, stride: 4 }).unwrap();
        let mut results = Vec::new();
        let mut x = seed | 1;
        for w in &windows {
            let mut rnd = || { x ^= x << 13; x ^= x >> 7; x ^= x << 17; (x % 1000) as f64 / 1000.0 };
            let ps: Vec<f64> = (0..w.len()).map(|_| rnd()).collect();
            let pe: Vec<f64> = (0..w.len()).map(|_| rnd()).collect();
            let spans = decode_window(&ps, &pe, 0.5, 30).unwrap();
            results.push(WindowResult {
                window_index: w.window_index,
                spans: spans.iter().map(|s| SpanCandidate::from_window_span(w, &text, s)).collect(),
                ynn_probs: [0.2, 0.3, 0.5],
            });
        }
        let doc = decode_document("d", &results).unwrap();
        for pair in doc.spans.windows(2) {
            prop_assert!(pair[0].char_end <= pair[1].char_start);
        }
        for s in &doc.spans {
            prop_assert_eq!(&text[s.char_start..s.char_end], s.text.as_str());
        }
        let best = doc.spans.iter().map(|s| s.score).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(doc.confidence, best);
        let ans = select_answer(&[doc], " ").unwrap();
        prop_assert!(!ans.text.is_empty());
    }
}
