//! The JSON API driven through the router, as the annotation UI uses it.

use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use chrono::{DateTime, Duration, Utc};
use serde_json::{json, Value};
use tower::ServiceExt;

use appropriateness::corpus::{Argument, Corpus, DuplicatePolicy, Format, Source};
use appropriateness::{AnnotationRecord, Dimension, ValidationMode};
use appropriateness_service::{Config, ManualClock};

const ADMIN: &str = "root-token";

struct Harness {
    clock: Arc<ManualClock>,
    config: Config,
    app: Router,
    _dir: tempfile::TempDir,
}

fn start() -> DateTime<Utc> {
    "2026-03-02T08:00:00Z".parse().unwrap()
}

impl Harness {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut config = Config::new(dir.path());
        config.admin_token = Some(ADMIN.into());
        let clock = Arc::new(ManualClock::new(start()));
        let app = config.app(clock.clone()).unwrap();
        Harness {
            clock,
            config,
            app,
            _dir: dir,
        }
    }

    /// Drops the router (and with it every writer) and reloads from disk.
    fn restart(&mut self) {
        self.app = Router::new();
        self.app = self.config.app(self.clock.clone()).unwrap();
    }

    async fn call(&self, method: &str, uri: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Vec<u8>) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let body = match body {
            Some(v) => {
                req = req.header("content-type", "application/json");
                Body::from(serde_json::to_vec(&v).unwrap())
            }
            None => Body::empty(),
        };
        let resp = self.app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
        let status = resp.status();
        (status, to_bytes(resp.into_body(), 1 << 24).await.unwrap().to_vec())
    }

    async fn json(&self, method: &str, uri: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
        let (s, b) = self.call(method, uri, token, body).await;
        (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
    }

    async fn next(&self, token: &str) -> Value {
        let (s, v) = self.json("GET", "/campaigns/pilot/next", Some(token), None).await;
        assert_eq!(s, StatusCode::OK, "{v}");
        v
    }

    async fn submit(&self, token: &str, record: &AnnotationRecord) -> (StatusCode, Value) {
        self.json("POST", "/campaigns/pilot/submit", Some(token), Some(serde_json::to_value(record).unwrap()))
            .await
    }

    /// Answers the next item with `make`, returning the argument id.
    async fn answer(&self, token: &str, who: &str, make: impl Fn(&str, &str) -> AnnotationRecord) -> String {
        let next = self.next(token).await;
        assert_eq!(next["status"], "item", "{next}");
        let id = next["argument"]["argument_id"].as_str().unwrap().to_string();
        let (s, ack) = self.submit(token, &make(&id, who)).await;
        assert_eq!(s, StatusCode::OK, "{ack}");
        id
    }
}

fn arguments(n: usize) -> Vec<Argument> {
    (0..n)
        .map(|i| Argument {
            argument_id: format!("arg{i:02}"),
            source: Source::ALL[i % 5],
            issue: format!("Issue {}", i % 3),
            text: format!("This is argument {i}. It has two sentences."),
        })
        .collect()
}

fn spec(n: usize, batch: usize) -> Value {
    json!({
        "campaign_id": "pilot",
        "arguments": arguments(n),
        "roster": [
            {"annotator_id": "ann1", "token": "tok1"},
            {"annotator_id": "ann2", "token": "tok2"},
            {"annotator_id": "ann3", "token": "tok3"},
        ],
        "batch_size": batch,
        "seed": 17,
    })
}

async fn harness(n: usize, batch: usize) -> Harness {
    let h = Harness::new();
    let (s, v) = h.json("POST", "/campaigns", Some(ADMIN), Some(spec(n, batch))).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    h
}

fn fine(id: &str, who: &str) -> AnnotationRecord {
    AnnotationRecord::appropriate(id, who)
}

/// Inappropriate for a varying set of reasons, always valid.
fn varied(id: &str, who: &str) -> AnnotationRecord {
    let k: usize = id.bytes().map(usize::from).sum::<usize>() + who.len() * 7 + who.bytes().last().map_or(0, usize::from);
    if k % 3 == 0 {
        return AnnotationRecord::appropriate(id, who);
    }
    let mut r = AnnotationRecord::appropriate(id, who).with_rating(1 + (k % 2) as u8);
    r = match k % 4 {
        0 => r.with(Dimension::TE, true).with(Dimension::EI, true),
        1 => r.with(Dimension::MC, true),
        2 => r.with(Dimension::MI, true).with(Dimension::UM, k % 5 == 0),
        _ => r.with(Dimension::OR, true).with(Dimension::TE, true),
    };
    r
}

#[tokio::test]
async fn create_reports_the_plan() {
    let h = Harness::new();
    let (s, v) = h.json("POST", "/campaigns", Some(ADMIN), Some(spec(10, 3))).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(v["batch_sizes"], json!([3, 3, 2, 2]));
    assert_eq!(v["pacing_window_secs"], 86400);
    let (s, v) = h.json("POST", "/campaigns", Some(ADMIN), Some(spec(10, 3))).await;
    assert_eq!(s, StatusCode::CONFLICT, "{v}");
    let (s, _) = h.json("POST", "/campaigns", Some("tok1"), Some(spec(10, 3))).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    let (s, v) = h.json("POST", "/campaigns", Some(ADMIN), Some(json!({"campaign_id": "x"}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "bad_request");
}

#[tokio::test]
async fn authentication_and_roster() {
    let h = harness(6, 3).await;
    let (s, _) = h.json("GET", "/campaigns/pilot/next", None, None).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    let (s, _) = h.json("GET", "/campaigns/pilot/next", Some("forged"), None).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    let (s, v) = h.json("GET", "/campaigns/pilot/next?annotator=ann2", Some("tok1"), None).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::FORBIDDEN, Some("forbidden")));
    let (s, v) = h.json("GET", "/campaigns/pilot/next?annotator=ghost", Some("tok1"), None).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::FORBIDDEN, Some("unknown_annotator")));
    let (s, v) = h.json("GET", "/campaigns/pilot/next?annotator=ann1", Some("tok1"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!((v["status"].as_str(), v["batch"].as_u64(), v["position"].as_u64()), (Some("item"), Some(1), Some(1)));
    let (s, _) = h.json("GET", "/campaigns/other/next", Some("tok1"), None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn strict_validation_is_returned_verbatim() {
    let h = harness(6, 3).await;
    let next = h.next("tok1").await;
    let id = next["argument"]["argument_id"].as_str().unwrap();

    let no_reason = AnnotationRecord::appropriate(id, "ann1").with_rating(1);
    let (s, v) = h.submit("tok1", &no_reason).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["violations"][0]["dimension"], "IN");
    assert!(v["violations"][0]["message"].as_str().unwrap().contains("core reason"), "{v}");

    let orphan = AnnotationRecord::appropriate(id, "ann1")
        .with_rating(2)
        .with(Dimension::TE, true)
        .with(Dimension::MS, true);
    let (s, v) = h.submit("tok1", &orphan).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["violations"][0]["dimension"], "MS");
    assert_eq!(v["violations"][0]["detail"]["rule"], "sub_without_parent");

    let (s, v) = h.json("POST", "/campaigns/pilot/submit", Some("tok1"), Some(json!({"argument_id": id}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST, "{v}");

    let (s, v) = h.submit("tok1", &AnnotationRecord::appropriate(id, "ann2")).await;
    assert_eq!(s, StatusCode::FORBIDDEN, "{v}");

    let (s, v) = h.submit("tok1", &fine(id, "ann1")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "accepted");
    assert_eq!(v["batch_id"], "batch-01");
    assert_eq!(v["overwritten"], false);
}

#[tokio::test]
async fn pacing_blocks_a_second_batch_within_the_window() {
    let h = harness(6, 3).await;
    for _ in 0..3 {
        h.clock.advance(Duration::minutes(2));
        h.answer("tok1", "ann1", fine).await;
    }
    let finished = start() + Duration::minutes(6);
    h.clock.advance(Duration::hours(1));
    let v = h.next("tok1").await;
    assert_eq!(v["status"], "blocked");
    let until: DateTime<Utc> = v["until"].as_str().unwrap().parse().unwrap();
    assert_eq!(until, finished + Duration::hours(24));

    let (_, progress) = h.json("GET", "/campaigns/pilot/progress", Some(ADMIN), None).await;
    assert_eq!(progress["annotators"][0]["completed_batches"], 1);
    assert_eq!(progress["annotators"][0]["blocked_until"], v["until"]);

    h.clock.advance(Duration::hours(23) - Duration::seconds(1));
    assert_eq!(h.next("tok1").await["status"], "blocked");
    h.clock.advance(Duration::seconds(1));
    let v = h.next("tok1").await;
    assert_eq!((v["status"].as_str(), v["batch"].as_u64()), (Some("item"), Some(2)));
    for _ in 0..3 {
        h.answer("tok1", "ann1", fine).await;
    }
    assert_eq!(h.next("tok1").await, json!({"status": "done", "completed_batches": 2}));
}

#[tokio::test]
async fn stale_items_are_refused() {
    let h = harness(6, 3).await;
    let (_, progress) = h.json("GET", "/campaigns/pilot/progress", Some("tok2"), None).await;
    assert_eq!(progress["batch_sizes"], json!([3, 3]));
    let first = h.next("tok1").await["argument"]["argument_id"].as_str().unwrap().to_string();
    let all: Vec<String> = arguments(6).into_iter().map(|a| a.argument_id).collect();
    // Find an id from batch 2 by answering batch 1 under another annotator.
    let mut batch1 = vec![];
    for _ in 0..3 {
        batch1.push(h.answer("tok2", "ann2", fine).await);
    }
    let later = all.iter().find(|a| !batch1.contains(a)).unwrap();
    let (s, v) = h.submit("tok1", &fine(later, "ann1")).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::CONFLICT, Some("stale_item")));
    let (s, _) = h.submit("tok1", &fine("missing", "ann1")).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, _) = h.submit("tok1", &fine(&first, "ann1")).await;
    assert_eq!(s, StatusCode::OK);
}

#[tokio::test]
async fn resubmission_overwrites_and_survives_restart() {
    let mut h = harness(6, 3).await;
    let id = h.answer("tok1", "ann1", fine).await;
    let revised = AnnotationRecord::appropriate(&id, "ann1")
        .with_rating(2)
        .with(Dimension::MC, true)
        .with(Dimension::MO, true);
    let (s, v) = h.submit("tok1", &revised).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["overwritten"], true);
    h.restart();
    let (_, progress) = h.json("GET", "/campaigns/pilot/progress", Some(ADMIN), None).await;
    assert_eq!(progress["records"], 1);
    assert_eq!(progress["annotators"][0]["revisions"], 1);
    let (_, tsv) = h.call("GET", "/campaigns/pilot/export/annotations", Some(ADMIN), None).await;
    let text = String::from_utf8(tsv).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with(&format!("{id}\tann1\tbatch-01\t2\t")));
}

#[tokio::test]
async fn concurrent_submissions_are_all_durable() {
    let mut h = harness(12, 12).await;
    let mut acked = 0;
    for round in 0..12 {
        let mut tasks = Vec::new();
        for (tok, who) in [("tok1", "ann1"), ("tok2", "ann2"), ("tok3", "ann3")] {
            let next = h.next(tok).await;
            let id = next["argument"]["argument_id"].as_str().unwrap().to_string();
            let app = h.app.clone();
            let body = serde_json::to_vec(&varied(&id, who)).unwrap();
            let tok = tok.to_string();
            tasks.push(tokio::spawn(async move {
                let req = Request::post("/campaigns/pilot/submit")
                    .header("authorization", format!("Bearer {tok}"))
                    .body(Body::from(body))
                    .unwrap();
                app.oneshot(req).await.unwrap().status()
            }));
        }
        for t in tasks {
            assert_eq!(t.await.unwrap(), StatusCode::OK, "round {round}");
            acked += 1;
        }
    }
    h.restart();
    let (_, progress) = h.json("GET", "/campaigns/pilot/progress", Some(ADMIN), None).await;
    assert_eq!(progress["records"], acked);
}

#[tokio::test]
async fn exports_round_trip_and_derive() {
    let h = harness(9, 9).await;
    for _ in 0..9 {
        for (tok, who) in [("tok1", "ann1"), ("tok2", "ann2"), ("tok3", "ann3")] {
            h.answer(tok, who, varied).await;
        }
    }
    let (s, tsv) = h.call("GET", "/campaigns/pilot/export/annotations", Some("tok3"), None).await;
    assert_eq!(s, StatusCode::OK);
    let mut corpus = Corpus::new();
    for a in arguments(9) {
        corpus.add_argument(a, DuplicatePolicy::Reject).unwrap();
    }
    let report = corpus
        .ingest_annotations(&tsv[..], Format::Tsv, ValidationMode::Strict, DuplicatePolicy::Reject)
        .unwrap();
    assert_eq!(report.ingested, 27, "{report:?}");
    let mut again = Vec::new();
    appropriateness::corpus::write_annotations(&mut again, Format::Tsv, corpus.annotations()).unwrap();
    let mut sorted: Vec<&str> = std::str::from_utf8(&again).unwrap().lines().collect();
    sorted[1..].sort();
    assert_eq!(sorted.join("\n") + "\n", String::from_utf8(tsv).unwrap());

    let (s, gold) = h.call("GET", "/campaigns/pilot/export/conservative-gold", Some(ADMIN), None).await;
    assert_eq!(s, StatusCode::OK);
    let gold = appropriateness::aggregate::LabelMatrix::read_tsv(&gold[..]).unwrap();
    assert_eq!(gold.len(), 9);

    let (s, csv) = h.call("GET", "/campaigns/pilot/export/agreement", Some(ADMIN), None).await;
    assert_eq!(s, StatusCode::OK);
    let csv = String::from_utf8(csv).unwrap();
    assert_eq!(csv.lines().count(), 15, "{csv}");
    assert!(csv.lines().nth(1).unwrap().starts_with("IN,"));

    let (s, csv) = h.call("GET", "/campaigns/pilot/export/correlations", Some(ADMIN), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 15);

    let (s, v) = h.json("GET", "/campaigns/pilot/export/everything", Some(ADMIN), None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST, "{v}");
    let (s, _) = h.json("GET", "/campaigns/pilot/export/annotations", None, None).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
}
