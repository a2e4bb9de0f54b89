mod common;

use std::path::Path;
use std::time::Duration;

use common::{ok, stub_server};
use obqa::qa_eval::{parse_qa_eval, to_qa_eval_lines};
use obqa::retrieval::RemoteRetriever;
use obqa_core::{GoldSource, QaExample, Ynn};
use proptest::prelude::*;

fn example() -> impl Strategy<Value = QaExample> {
    ("[a-z0-9-]{1,8}", "\\PC{0,40}", "\\PC{0,20}", 0usize..3, "[a-z0-9./]{1,12}").prop_map(|(id, q, a, y, doc)| {
        QaExample {
            question_id: id,
            question: q,
            gold_text: a,
            gold_ynn: Ynn::from_index(y).unwrap(),
            source: GoldSource::Document { doc_id: doc },
        }
    })
}

proptest! {
    #[test]
    fn qa_lines_round_trip(examples in prop::collection::vec(example(), 0..12)) {
        let text = to_qa_eval_lines(&examples);
        prop_assert_eq!(parse_qa_eval(&text, Path::new("mem.jsonl")).unwrap(), examples);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn remote_lists_are_ranked_whatever_the_server_order(
        hits in prop::collection::vec(("[a-e]{1,3}", 0u8..6), 0..10),
        k in 1usize..8,
    ) {
        let results: Vec<_> = hits.iter().map(|(d, s)| serde_json::json!({"doc_id": d, "score": f64::from(*s) / 2.0})).collect();
        let (url, _) = stub_server(vec![ok(serde_json::json!({ "results": results }))]);
        let list = RemoteRetriever::new(url, Duration::from_secs(5)).request("q", k).unwrap();
        prop_assert!(list.len() <= k.min(hits.len()));
        for w in list.entries.windows(2) {
            prop_assert!(w[0].score > w[1].score || (w[0].score == w[1].score && w[0].doc_id <= w[1].doc_id));
        }
    }
}
