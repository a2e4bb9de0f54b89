//! Seeded synthetic corpora with planted facts, used as desk-scale fixtures.
//!
//! Every document holds filler sentences plus one fact about a unique,
//! made-up entity:
//!
//! ```text
//! Zorbaku relates to crimson falcon.        (question: which value ..., verdict none)
//! Zorbaku supports crimson falcon.          (question: is ... compatible, verdict yes)
//! Zorbaku does not support crimson falcon.  (question: is ... compatible, verdict no)
//! ```
//!
//! The gold text is always the two-word value. Filler, value, and question
//! vocabularies are disjoint, so the entity name is the only query term that
//! occurs in the corpus.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{CorpusStore, Document};
use crate::datasets::{GoldSource, QaExample, Ynn};

const FILLER: &[&str] = &[
    "system",
    "network",
    "cluster",
    "resource",
    "policy",
    "region",
    "account",
    "service",
    "storage",
    "instance",
    "bucket",
    "endpoint",
    "metric",
    "alarm",
    "role",
    "subnet",
    "gateway",
    "volume",
    "snapshot",
    "backup",
    "request",
    "response",
    "configuration",
    "console",
    "template",
    "stack",
    "queue",
    "topic",
    "function",
    "runtime",
    "log",
    "event",
    "table",
    "index",
    "cache",
    "node",
    "replica",
    "engine",
    "version",
    "parameter",
    "group",
    "tag",
    "key",
    "certificate",
    "domain",
    "route",
    "pipeline",
    "build",
    "deployment",
    "monitor",
    "the",
    "a",
    "of",
    "and",
    "for",
    "in",
    "on",
    "uses",
    "requires",
    "provides",
    "manages",
    "stores",
    "sends",
    "creates",
    "updates",
    "each",
    "every",
    "this",
    "that",
    "can",
    "may",
    "will",
    "should",
];

const MODIFIERS: &[&str] = &[
    "crimson", "azure", "golden", "silent", "rapid", "frozen", "hollow", "bright", "ancient", "gentle", "quiet",
    "bold", "silver", "amber", "velvet", "hidden", "lunar", "solar", "misty", "rustic", "copper", "ivory", "scarlet",
    "emerald",
];

const NOUNS: &[&str] = &[
    "falcon", "harbor", "lantern", "meadow", "compass", "glacier", "orchid", "beacon", "canyon", "ember", "willow",
    "prism", "summit", "anchor", "thicket", "quarry", "ripple", "cinder", "pebble", "tundra", "marble", "spire",
    "delta", "grove",
];

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Fact form of document `i`; two in six documents carry a yes/no fact.
pub fn fact_kind(doc_index: usize) -> Ynn {
    match doc_index % 6 {
        4 => Ynn::Yes,
        5 => Ynn::No,
        _ => Ynn::None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthFixture {
    pub corpus: CorpusStore,
    /// Evaluation questions.
    pub questions: Vec<QaExample>,
    /// One question per planted fact that no evaluation question targets.
    pub training: Vec<QaExample>,
}

fn capitalize(word: &str) -> String {
    let mut c = word.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn entity_name(rng: &mut ChaCha8Rng) -> String {
    let mut s = String::new();
    for _ in 0..3 {
        s.push(CONSONANTS[rng.gen_range(0..CONSONANTS.len())] as char);
        s.push(VOWELS[rng.gen_range(0..VOWELS.len())] as char);
    }
    s.push(CONSONANTS[rng.gen_range(0..CONSONANTS.len())] as char);
    s
}

fn filler_sentence(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(5..=9);
    let words: Vec<&str> = (0..n).map(|_| FILLER[rng.gen_range(0..FILLER.len())]).collect();
    format!("{}.", capitalize(&words.join(" ")))
}

/// Question text for a document of the given fact kind.
pub fn question_for(entity: &str, kind: Ynn) -> String {
    match kind {
        Ynn::None => format!("Which value is {} linked with?", capitalize(entity)),
        Ynn::Yes | Ynn::No => format!("Is {} compatible?", capitalize(entity)),
    }
}

/// Builds `n_docs` documents and `n_questions` questions. Question `j`
/// targets document `j mod n_docs`; documents `n_questions..n_docs` form the
/// training split.
pub fn synth_generate(seed: u64, n_docs: usize, n_questions: usize) -> SynthFixture {
    let n_docs = n_docs.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let reserved: BTreeSet<&str> = FILLER.iter().chain(MODIFIERS).chain(NOUNS).copied().collect();
    let mut entities: Vec<String> = Vec::with_capacity(n_docs);
    let mut seen = BTreeSet::new();
    while entities.len() < n_docs {
        let e = entity_name(&mut rng);
        if !reserved.contains(e.as_str()) && seen.insert(e.clone()) {
            entities.push(e);
        }
    }

    let mut values: Vec<(usize, usize)> =
        (0..MODIFIERS.len()).flat_map(|m| (0..NOUNS.len()).map(move |n| (m, n))).collect();
    values.shuffle(&mut rng);

    let mut docs = Vec::with_capacity(n_docs);
    let mut facts = Vec::with_capacity(n_docs);
    for (i, entity) in entities.iter().enumerate() {
        let (m, n) = values[i % values.len()];
        let value = format!("{} {}", MODIFIERS[m], NOUNS[n]);
        let kind = fact_kind(i);
        let subject = capitalize(entity);
        let fact = match kind {
            Ynn::None => format!("{subject} relates to {value}."),
            Ynn::Yes => format!("{subject} supports {value}."),
            Ynn::No => format!("{subject} does not support {value}."),
        };
        let n_filler = rng.gen_range(2..=5);
        let mut sentences: Vec<String> = (0..n_filler).map(|_| filler_sentence(&mut rng)).collect();
        let at = rng.gen_range(0..=sentences.len());
        sentences.insert(at, fact);
        let doc_id = format!("doc-{i:04}.txt");
        docs.push(Document::new(doc_id.clone(), sentences.join(" ")));
        facts.push((doc_id, entity.clone(), value, kind));
    }

    let ask = |prefix: &str, j: usize| {
        let (doc_id, entity, value, kind) = &facts[j % n_docs];
        QaExample {
            question_id: format!("{prefix}-{j:04}"),
            question: question_for(entity, *kind),
            gold_text: value.clone(),
            gold_ynn: *kind,
            source: GoldSource::Document { doc_id: doc_id.clone() },
        }
    };
    let questions = (0..n_questions).map(|j| ask("q", j)).collect();
    let training = (n_questions..n_docs).map(|j| ask("t", j)).collect();

    SynthFixture { corpus: CorpusStore::new(docs).expect("generated ids are unique"), questions, training }
}
