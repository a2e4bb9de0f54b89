mod common;

use std::time::{Duration, Instant};

use common::{ok, stub_server, Reply, Workspace};
use obqa::pipeline::{Pipeline, PipelineConfig, RetrieverConfig};
use obqa::retrieval::{RemoteRetriever, RetrieveError, Retriever, TransportError};
use serde_json::json;

#[test]
fn sends_query_and_k_and_reads_results() {
    let (url, requests) = stub_server(vec![ok(json!({"results": [{"doc_id": "a.txt", "score": 2.5}]}))]);
    let r = RemoteRetriever::new(url, Duration::from_secs(5));
    let list = r.retrieve("where is it", 4).unwrap();
    assert_eq!(list.entries.len(), 1);
    assert_eq!(list.entries[0].doc_id, "a.txt");
    assert_eq!(list.entries[0].score, 2.5);
    let sent: serde_json::Value = serde_json::from_str(&requests.recv().unwrap()).unwrap();
    assert_eq!(sent, json!({"query": "where is it", "k": 4}));
}

#[test]
fn unsorted_results_are_ranked_and_truncated() {
    let body = json!({"results": [
        {"doc_id": "c", "score": 1.0},
        {"doc_id": "a", "score": 3.0},
        {"doc_id": "b", "score": 3.0},
        {"doc_id": "d", "score": 0.5},
    ]});
    let (url, _) = stub_server(vec![ok(body)]);
    let list = RemoteRetriever::new(url, Duration::from_secs(5)).retrieve("q", 3).unwrap();
    let ids: Vec<&str> = list.doc_ids().collect();
    assert_eq!(ids, ["a", "b", "c"]);
}

#[test]
fn error_status_is_reported() {
    let (url, _) = stub_server(vec![Reply::Respond { status: 503, body: "{}".into() }]);
    let err = RemoteRetriever::new(url, Duration::from_secs(5)).request("q", 3).unwrap_err();
    assert_eq!(err, TransportError::Status(503));
}

#[test]
fn malformed_bodies_are_reported() {
    for body in ["not json", r#"{"hits": []}"#, r#"{"results": [{"doc_id": "a"}]}"#] {
        let (url, _) = stub_server(vec![Reply::Respond { status: 200, body: body.into() }]);
        let err = RemoteRetriever::new(url, Duration::from_secs(5)).request("q", 3).unwrap_err();
        assert!(matches!(err, TransportError::Malformed(_)), "{body}: {err:?}");
    }
}

#[test]
fn slow_service_times_out() {
    let (url, _) = stub_server(vec![Reply::Stall(Duration::from_secs(3))]);
    let t = Instant::now();
    let err = RemoteRetriever::new(url, Duration::from_millis(300)).request("q", 3).unwrap_err();
    assert_eq!(err, TransportError::Timeout(Duration::from_millis(300)));
    assert!(t.elapsed() < Duration::from_secs(2));
}

#[test]
fn pipeline_falls_back_to_builtin_index() {
    let ws = Workspace::new(3, 12, 6, 1);
    let (url, _) = stub_server(vec![Reply::Respond { status: 500, body: String::new() }]);
    let remote = |fallback_to_builtin| PipelineConfig {
        retriever: RetrieverConfig::Remote { endpoint: url.clone(), timeout_ms: 2000, fallback_to_builtin },
        ..ws.config()
    };
    let q = &ws.fixture.questions[0].question;

    let with = Pipeline::from_config(remote(true)).unwrap();
    let out = with.answer(q).unwrap();
    assert!(out.retriever_fallback);
    assert!(!out.provenance.is_empty());

    let without = Pipeline::from_config(remote(false)).unwrap();
    let err = without.answer(q).unwrap_err();
    assert!(matches!(err, obqa::pipeline::PipelineError::Retrieve(RetrieveError::Transport(_))), "{err}");
}
