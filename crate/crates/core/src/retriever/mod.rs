//! Lexical retrieval: an inverted index scored with BM25, ranked lists, and
//! ranking metrics (strict precision@K and hit@K).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, CorpusStore, Document, Token};

mod codec;

pub use codec::{DecodeIndexError, INDEX_FORMAT_VERSION, INDEX_MAGIC};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RetrieverError {
    EmptyCorpus,
    UnknownDocument(String),
    InvalidK,
}

impl fmt::Display for RetrieverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RetrieverError::EmptyCorpus => f.write_str("cannot build an index over an empty corpus"),
            RetrieverError::UnknownDocument(id) => write!(f, "document `{id}` is not in the index"),
            RetrieverError::InvalidK => f.write_str("k must be at least 1"),
        }
    }
}

impl core::error::Error for RetrieverError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    /// Ordinal of the document in the index's sorted id list.
    pub doc: u32,
    pub tf: u32,
}

/// Term counts for one document; the per-document half of index building.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocTerms {
    pub doc_id: String,
    pub length: u32,
    pub counts: BTreeMap<String, u32>,
}

impl DocTerms {
    pub fn from_document(doc: &Document) -> Self {
        let tokens = tokenize(&doc.text);
        let mut counts = BTreeMap::new();
        for t in &tokens {
            *counts.entry(t.surface.clone()).or_insert(0u32) += 1;
        }
        DocTerms { doc_id: doc.doc_id.clone(), length: tokens.len() as u32, counts }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    params: Bm25Params,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    postings: BTreeMap<String, Vec<Posting>>,
    avg_doc_len: f64,
}

/// Builds a BM25 index with the default parameters.
pub fn build_index(corpus: &CorpusStore) -> Result<InvertedIndex, RetrieverError> {
    InvertedIndex::build(corpus, Bm25Params::default())
}

impl InvertedIndex {
    pub fn build(corpus: &CorpusStore, params: Bm25Params) -> Result<Self, RetrieverError> {
        let terms = corpus.iter().map(DocTerms::from_document).collect();
        Self::from_doc_terms(terms, params)
    }

    /// Merges per-document term counts into one index. Input order does not
    /// matter; documents are re-sorted by id.
    pub fn from_doc_terms(mut docs: Vec<DocTerms>, params: Bm25Params) -> Result<Self, RetrieverError> {
        if docs.is_empty() {
            return Err(RetrieverError::EmptyCorpus);
        }
        docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_ids = Vec::with_capacity(docs.len());
        let mut doc_lengths = Vec::with_capacity(docs.len());
        for (ordinal, d) in docs.into_iter().enumerate() {
            for (term, tf) in d.counts {
                postings.entry(term).or_default().push(Posting { doc: ordinal as u32, tf });
            }
            doc_ids.push(d.doc_id);
            doc_lengths.push(d.length);
        }
        Ok(Self::from_parts(params, doc_ids, doc_lengths, postings))
    }

    fn from_parts(
        params: Bm25Params,
        doc_ids: Vec<String>,
        doc_lengths: Vec<u32>,
        postings: BTreeMap<String, Vec<Posting>>,
    ) -> Self {
        let total: f64 = doc_lengths.iter().map(|&l| f64::from(l)).sum();
        let avg_doc_len = total / doc_lengths.len() as f64;
        InvertedIndex { params, doc_ids, doc_lengths, postings, avg_doc_len }
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_doc_len(&self) -> f64 {
        self.avg_doc_len
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_length(&self, doc_id: &str) -> Option<u32> {
        self.ordinal(doc_id).map(|i| self.doc_lengths[i])
    }

    pub fn postings(&self, term: &str) -> Option<&[Posting]> {
        self.postings.get(term).map(Vec::as_slice)
    }

    pub fn num_terms(&self) -> usize {
        self.postings.len()
    }

    fn ordinal(&self, doc_id: &str) -> Option<usize> {
        self.doc_ids.binary_search_by(|d| d.as_str().cmp(doc_id)).ok()
    }

    /// ln(1 + (N - df + 0.5) / (df + 0.5)); always positive.
    pub fn idf(&self, term: &str) -> f64 {
        let df = self.postings.get(term).map_or(0, Vec::len) as f64;
        let n = self.num_docs() as f64;
        libm::log(1.0 + (n - df + 0.5) / (df + 0.5))
    }

    fn term_weight(&self, idf: f64, tf: u32, doc_len: u32) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let tf = f64::from(tf);
        let norm = 1.0 - b + b * f64::from(doc_len) / self.avg_doc_len;
        idf * (tf * (k1 + 1.0) / (tf + k1 * norm))
    }

    /// BM25 score of one document. Query terms missing from the index add 0.
    pub fn score_bm25(&self, query_terms: &[Token], doc_id: &str) -> Result<f64, RetrieverError> {
        let ord = self.ordinal(doc_id).ok_or_else(|| RetrieverError::UnknownDocument(String::from(doc_id)))?;
        let mut score = 0.0;
        for t in query_terms {
            let Some(list) = self.postings.get(&t.surface) else { continue };
            if let Ok(p) = list.binary_search_by(|p| p.doc.cmp(&(ord as u32))) {
                score += self.term_weight(self.idf(&t.surface), list[p].tf, self.doc_lengths[ord]);
            }
        }
        Ok(score)
    }

    /// Top-`k` documents by BM25. Documents matching no query term are left
    /// out, so the list may be shorter than `k`.
    pub fn retrieve(&self, query: &str, k: usize) -> Result<RankedList, RetrieverError> {
        if k == 0 {
            return Err(RetrieverError::InvalidK);
        }
        let mut scores = alloc::vec![0.0f64; self.num_docs()];
        let mut touched = BTreeSet::new();
        for t in tokenize(query) {
            let Some(list) = self.postings.get(&t.surface) else { continue };
            let idf = self.idf(&t.surface);
            for p in list {
                let d = p.doc as usize;
                scores[d] += self.term_weight(idf, p.tf, self.doc_lengths[d]);
                touched.insert(d);
            }
        }
        let entries = touched
            .into_iter()
            .filter(|&d| scores[d] > 0.0)
            .map(|d| RankedEntry { doc_id: self.doc_ids[d].clone(), score: scores[d] })
            .collect();
        Ok(RankedList::from_unsorted(query, entries, k))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub doc_id: String,
    pub score: f64,
}

/// Retrieval results in descending score order, ties by ascending `doc_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query: String,
    pub entries: Vec<RankedEntry>,
}

fn rank_order(a: &RankedEntry, b: &RankedEntry) -> Ordering {
    b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal).then_with(|| a.doc_id.cmp(&b.doc_id))
}

impl RankedList {
    pub fn empty(query: &str) -> Self {
        RankedList { query: String::from(query), entries: Vec::new() }
    }

    /// Sorts, drops duplicate ids (keeping the best score), and truncates to `k`.
    pub fn from_unsorted(query: &str, mut entries: Vec<RankedEntry>, k: usize) -> Self {
        entries.sort_by(rank_order);
        let mut seen = BTreeSet::new();
        entries.retain(|e| seen.insert(e.doc_id.clone()));
        entries.truncate(k);
        RankedList { query: String::from(query), entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.doc_id.as_str())
    }

    pub fn position(&self, doc_id: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.doc_id == doc_id)
    }
}

/// Strict precision@K: relevant documents among the top `k`, divided by `k`.
/// An empty ranking (or `k == 0`) scores 0.
pub fn precision_at_k(ranked: &RankedList, relevant: &BTreeSet<String>, k: usize) -> f64 {
    if k == 0 || ranked.is_empty() {
        return 0.0;
    }
    let hits = ranked.doc_ids().take(k).filter(|d| relevant.contains(*d)).count();
    hits as f64 / k as f64
}

/// Whether `gold` appears among the first `k` entries.
pub fn hit_at_k(ranked: &RankedList, gold: &str, k: usize) -> bool {
    ranked.doc_ids().take(k).any(|d| d == gold)
}

/// Mean hit@K over `(ranking, gold)` pairs; 0 for an empty dataset.
pub fn mean_hit_at_k<'a, I>(pairs: I, k: usize) -> f64
where
    I: IntoIterator<Item = (&'a RankedList, &'a str)>,
{
    let (mut hits, mut n) = (0usize, 0usize);
    for (ranked, gold) in pairs {
        hits += usize::from(hit_at_k(ranked, gold, k));
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        hits as f64 / n as f64
    }
}

fn char_trigrams(text: &str) -> BTreeSet<[char; 3]> {
    let chars: Vec<char> = text.chars().flat_map(char::to_lowercase).collect();
    chars.windows(3).map(|w| [w[0], w[1], w[2]]).collect()
}

/// Document sharing the most character trigrams with `query` (ties by id).
/// Used when the index returns nothing; `None` only for an empty corpus.
pub fn lexical_fallback<'a>(corpus: &'a CorpusStore, query: &str) -> Option<&'a Document> {
    let q = char_trigrams(query);
    let mut best: Option<(usize, &Document)> = None;
    for doc in corpus.iter() {
        let d = char_trigrams(&doc.text);
        let shared = q.intersection(&d).count();
        if best.is_none_or(|(s, _)| shared > s) {
            best = Some((shared, doc));
        }
    }
    best.map(|(_, d)| d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn corpus(docs: &[(&str, &str)]) -> CorpusStore {
        CorpusStore::new(docs.iter().map(|(i, t)| Document::new(*i, *t)).collect()).unwrap()
    }

    fn entry(id: &str, score: f64) -> RankedEntry {
        RankedEntry { doc_id: id.into(), score }
    }

    #[test]
    fn build_small_index() {
        let idx = build_index(&corpus(&[("d1", "cat sat"), ("d2", "dog ran")])).unwrap();
        assert_eq!(idx.num_docs(), 2);
        assert_eq!(idx.avg_doc_len(), 2.0);
        assert_eq!(idx.postings("cat").unwrap(), &[Posting { doc: 0, tf: 1 }]);
        assert_eq!(idx.postings("ran").unwrap(), &[Posting { doc: 1, tf: 1 }]);
        assert_eq!(idx.num_terms(), 4);
    }

    #[test]
    fn tf_counting() {
        let idx = build_index(&corpus(&[("d1", "cat cat")])).unwrap();
        assert_eq!(idx.postings("cat").unwrap(), &[Posting { doc: 0, tf: 2 }]);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert_eq!(build_index(&CorpusStore::default()), Err(RetrieverError::EmptyCorpus));
    }

    #[test]
    fn bm25_hand_value() {
        let idx = build_index(&corpus(&[("d1", "cat sat"), ("d2", "dog ran")])).unwrap();
        // idf = ln(1 + 1.5/1.5) = ln 2, tf part = 2.2 / 2.2 = 1
        let s = idx.score_bm25(&tokenize("cat"), "d1").unwrap();
        assert!((s - core::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(idx.score_bm25(&tokenize("cat"), "d2").unwrap(), 0.0);
        assert_eq!(idx.score_bm25(&tokenize("zebra"), "d1").unwrap(), 0.0);
        assert_eq!(idx.score_bm25(&tokenize("cat"), "d9"), Err(RetrieverError::UnknownDocument("d9".into())));
    }

    #[test]
    fn retrieve_unique_term_and_oov() {
        let idx = build_index(&corpus(&[
            ("a", "storage types general purpose"),
            ("b", "limits and quotas"),
            ("c", "storage best practices"),
        ]))
        .unwrap();
        let r = idx.retrieve("what are the quotas", 3).unwrap();
        assert_eq!(r.doc_ids().collect::<Vec<_>>(), vec!["b"]);
        assert!(idx.retrieve("zzz qqq", 3).unwrap().is_empty());
        assert_eq!(idx.retrieve("storage", 0), Err(RetrieverError::InvalidK));
        let r = idx.retrieve("storage", 1).unwrap();
        assert_eq!(r.len(), 1);
    }

    #[test]
    fn ranked_list_invariants_enforced() {
        let r = RankedList::from_unsorted(
            "q",
            vec![entry("d2", 0.5), entry("d7", 0.9), entry("d1", 0.5), entry("d7", 0.1)],
            10,
        );
        let ids: Vec<_> = r.doc_ids().collect();
        assert_eq!(ids, vec!["d7", "d1", "d2"]);
        assert_eq!(r.entries[0].score, 0.9);
        assert_eq!(RankedList::from_unsorted("q", r.entries.clone(), 2).len(), 2);
    }

    fn ranked(ids: &[&str]) -> RankedList {
        let n = ids.len() as f64;
        RankedList { query: "q".into(), entries: ids.iter().enumerate().map(|(i, d)| entry(d, n - i as f64)).collect() }
    }

    fn set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| String::from(*s)).collect()
    }

    #[test]
    fn precision_examples() {
        let r = ranked(&["d3", "d7", "d9"]);
        assert!((precision_at_k(&r, &set(&["d7"]), 3) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(precision_at_k(&r, &set(&["d3", "d7", "d9"]), 3), 1.0);
        assert_eq!(precision_at_k(&r, &set(&["x"]), 3), 0.0);
        // denominator stays k even when the list is shorter
        assert!((precision_at_k(&r, &set(&["d7"]), 5) - 0.2).abs() < 1e-12);
        assert_eq!(precision_at_k(&ranked(&[]), &set(&["d7"]), 5), 0.0);
    }

    #[test]
    fn hit_examples() {
        let r = ranked(&["d3", "d7"]);
        assert!(hit_at_k(&r, "d7", 3));
        assert!(!hit_at_k(&r, "d7", 1));
        assert!(!hit_at_k(&r, "d1", 3));
        let other = ranked(&["d1"]);
        let m = mean_hit_at_k([(&r, "d7"), (&other, "d7")], 2);
        assert_eq!(m, 0.5);
    }

    #[test]
    fn fallback_prefers_shared_trigrams() {
        let c = corpus(&[("a", "nothing alike"), ("b", "storage volumes"), ("c", "zzz")]);
        assert_eq!(lexical_fallback(&c, "storag").unwrap().doc_id, "b");
        assert_eq!(lexical_fallback(&c, "qq").unwrap().doc_id, "a");
        assert!(lexical_fallback(&CorpusStore::default(), "x").is_none());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_ranked() -> impl Strategy<Value = RankedList> {
            proptest::collection::btree_set(0u8..30, 0..15).prop_map(|ids| {
                let ids: Vec<String> = ids.into_iter().map(|i| alloc::format!("d{i}")).collect();
                let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
                ranked(&refs)
            })
        }

        proptest! {
            #[test]
            fn hit_monotone_and_precision_bounded(r in arb_ranked(), gold in 0u8..30, k in 1usize..20) {
                let gold = alloc::format!("d{gold}");
                prop_assert!(hit_at_k(&r, &gold, k) <= hit_at_k(&r, &gold, k + 1));
                let p = precision_at_k(&r, &set(&[gold.as_str()]), k);
                prop_assert!((0.0..=1.0 / k as f64 + 1e-15).contains(&p));
            }
        }
    }
}
