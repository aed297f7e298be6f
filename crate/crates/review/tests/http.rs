//! End-to-end exercise of the review API over real HTTP: task listing and
//! filters, decision submission with optimistic concurrency, idempotent
//! retries, and export/replay equality across a service restart.

use std::future::IntoFuture;
use std::net::SocketAddr;
use std::path::Path;

use serde_json::{json, Value};

use advsense_core::senses::{write_senses, Provenance, SenseEntry};
use advsense_core::synsets::SynsetParams;
use advsense_core::taxonomy::{SupersenseCategory, Taxonomy};
use advsense_review::{router, ServiceConfig};

fn draft(sense_id: &str, lemma: &str, example: &str) -> SenseEntry {
    SenseEntry {
        sense_id: sense_id.to_string(),
        lemma: lemma.to_string(),
        category: Some(SupersenseCategory::Manner),
        gloss: format!("{lemma} (sense 1): as in '{example}'"),
        example: Some(example.to_string()),
        example_occurrence_id: Some(format!("occ-{sense_id}")),
        cluster_id: format!("c-{sense_id}"),
        provenance: Provenance::Auto,
    }
}

fn write_run_dir(dir: &Path) {
    let drafts: Vec<SenseEntry> = (0..5)
        .map(|i| {
            draft(
                &format!("s{i}"),
                "hopefully",
                "hopefully the weather will be fine on Sunday",
            )
        })
        .collect();
    let mut buf = Vec::new();
    write_senses(&mut buf, &drafts).unwrap();
    std::fs::write(dir.join("senses.jsonl"), buf).unwrap();
}

async fn start(dir: &Path) -> SocketAddr {
    let config = ServiceConfig {
        run_dir: dir.to_path_buf(),
        taxonomy: Taxonomy::builtin(),
        synset_params: SynsetParams::default(),
        ui_dir: None,
    };
    let app = router(config).unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(axum::serve(listener, app).into_future());
    addr
}

#[tokio::test]
async fn review_loop_over_http() {
    let dir = tempfile::tempdir().unwrap();
    write_run_dir(dir.path());
    let addr = start(dir.path()).await;
    let base = format!("http://{addr}");
    let client = reqwest::Client::new();

    // health
    let health: Value = client.get(format!("{base}/health")).send().await.unwrap().json().await.unwrap();
    assert_eq!(health["status"], "ok");

    // fresh run: 5 classify + 5 verify tasks, none done
    let tasks: Value = client.get(format!("{base}/tasks")).send().await.unwrap().json().await.unwrap();
    assert_eq!(tasks["tasks"].as_array().unwrap().len(), 10);
    let done: Value = client
        .get(format!("{base}/tasks?state=done"))
        .send().await.unwrap().json().await.unwrap();
    assert!(done["tasks"].as_array().unwrap().is_empty());

    // unknown filter values are request errors
    let bad = client.get(format!("{base}/tasks?kind=nonsense")).send().await.unwrap();
    assert_eq!(bad.status(), 400);

    // fetch one task
    let task: Value = client
        .get(format!("{base}/tasks/classify:s0"))
        .send().await.unwrap().json().await.unwrap();
    assert_eq!(task["task"]["revision"], 0);
    assert_eq!(task["task"]["kind"], "classify_sense");
    assert!(task["task"]["payload"]["suggestions"].is_array());

    // classify s0 as speaker_oriented
    let response = client
        .post(format!("{base}/decisions"))
        .header("x-actor", "annotator-1")
        .json(&json!({
            "task_id": "classify:s0",
            "task_revision": 0,
            "result": {"type": "classify", "category": "speaker_oriented"},
        }))
        .send().await.unwrap();
    assert_eq!(response.status(), 200);
    let body: Value = response.json().await.unwrap();
    assert_eq!(body["applied"], true);
    assert_eq!(body["sense"]["category"], "speaker_oriented");
    assert_eq!(body["sense"]["provenance"], "human_validated");
    let decision_id = body["decision_id"].as_str().unwrap().to_string();

    // identical retry: accepted idempotently, not re-applied
    let retry: Value = client
        .post(format!("{base}/decisions"))
        .header("x-actor", "annotator-1")
        .json(&json!({
            "task_id": "classify:s0",
            "task_revision": 0,
            "decision_id": decision_id,
            "result": {"type": "classify", "category": "speaker_oriented"},
        }))
        .send().await.unwrap().json().await.unwrap();
    assert_eq!(retry["applied"], false);

    // a different submission against the finished task conflicts
    let conflict = client
        .post(format!("{base}/decisions"))
        .header("x-actor", "annotator-2")
        .json(&json!({
            "task_id": "classify:s0",
            "task_revision": 0,
            "result": {"type": "classify", "category": "degree"},
        }))
        .send().await.unwrap();
    assert_eq!(conflict.status(), 409);

    // classification changed the sense, so the verify task moved to rev 1;
    // a stale client sees a revision conflict, then succeeds after reload
    let stale = client
        .post(format!("{base}/decisions"))
        .header("x-actor", "annotator-2")
        .json(&json!({
            "task_id": "verify:s0",
            "task_revision": 0,
            "result": {"type": "approve_example"},
        }))
        .send().await.unwrap();
    assert_eq!(stale.status(), 409);
    let ok = client
        .post(format!("{base}/decisions"))
        .header("x-actor", "annotator-2")
        .json(&json!({
            "task_id": "verify:s0",
            "task_revision": 1,
            "result": {"type": "approve_example"},
        }))
        .send().await.unwrap();
    assert_eq!(ok.status(), 200);

    // wrong result type for a task kind
    let mismatch = client
        .post(format!("{base}/decisions"))
        .header("x-actor", "annotator-1")
        .json(&json!({
            "task_id": "verify:s1",
            "task_revision": 0,
            "result": {"type": "classify", "category": "manner"},
        }))
        .send().await.unwrap();
    assert_eq!(mismatch.status(), 422);

    // actor is mandatory
    let anonymous = client
        .post(format!("{base}/decisions"))
        .json(&json!({
            "task_id": "classify:s1",
            "task_revision": 0,
            "result": {"type": "classify", "category": "manner"},
        }))
        .send().await.unwrap();
    assert_eq!(anonymous.status(), 400);

    // unknown task
    let missing = client
        .post(format!("{base}/decisions"))
        .header("x-actor", "annotator-1")
        .json(&json!({
            "task_id": "classify:ghost",
            "task_revision": 0,
            "result": {"type": "classify", "category": "manner"},
        }))
        .send().await.unwrap();
    assert_eq!(missing.status(), 404);

    // export now, then restart the service over the same directory: the
    // replayed snapshot must be byte-identical (timestamps live in the log)
    let export_live = client
        .get(format!("{base}/export"))
        .send().await.unwrap().bytes().await.unwrap();
    let addr2 = start(dir.path()).await;
    let export_replayed = client
        .get(format!("http://{addr2}/export"))
        .send().await.unwrap().bytes().await.unwrap();
    assert_eq!(export_live, export_replayed);

    // the gloss task spawned by classification is visible and completable
    let gloss: Value = client
        .get(format!("{base}/tasks/gloss:s0"))
        .send().await.unwrap().json().await.unwrap();
    let revision = gloss["task"]["revision"].as_u64().unwrap();
    let edited = client
        .post(format!("{base}/decisions"))
        .header("x-actor", "annotator-1")
        .json(&json!({
            "task_id": "gloss:s0",
            "task_revision": revision,
            "result": {"type": "edit_gloss", "text": "it is to be hoped that"},
        }))
        .send().await.unwrap();
    assert_eq!(edited.status(), 200);
    let senses: Value = client
        .get(format!("{base}/senses"))
        .send().await.unwrap().json().await.unwrap();
    let s0 = senses["senses"]
        .as_array().unwrap()
        .iter()
        .find(|s| s["sense_id"] == "s0")
        .unwrap();
    assert_eq!(s0["gloss"], "it is to be hoped that");
}
