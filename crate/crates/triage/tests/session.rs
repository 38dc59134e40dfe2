mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::http::StatusCode;
use common::{call, items, kappa_oracle};
use latent_sv_triage::{router, Store};
use serde_json::{json, Value};

fn verdict_json(tp: bool) -> (&'static str, &'static str) {
    if tp {
        ("true_positive", "n_a")
    } else {
        ("false_positive", "incorrect_line_mapping")
    }
}

struct Logged {
    labeler: String,
    had_labeled: bool,
    response: Value,
}

/// Labelers take turns pulling their next item until both queues are empty.
async fn run_session(
    app: &axum::Router,
    plan: &BTreeMap<&str, Vec<bool>>,
    ids: &[String],
) -> Vec<Logged> {
    let mut log = Vec::new();
    let mut done: BTreeMap<&str, usize> = plan.keys().map(|k| (*k, 0)).collect();
    loop {
        let mut progressed = false;
        for (&who, verdicts) in plan {
            let (status, body) =
                call(app, "GET", &format!("/items/next?labeler={who}"), None).await;
            if status == StatusCode::NO_CONTENT {
                continue;
            }
            assert_eq!(status, StatusCode::OK);
            let id = body["item_id"].as_str().unwrap().to_string();
            log.push(Logged {
                labeler: who.into(),
                had_labeled: false,
                response: body.clone(),
            });
            let idx = ids.iter().position(|i| *i == id).unwrap();
            let (v, r) = verdict_json(verdicts[idx]);
            let (status, res) = call(
                app,
                "POST",
                "/labels",
                Some(json!({"item_id": id, "labeler_id": who, "verdict": v, "reason": r})),
            )
            .await;
            assert_eq!(status, StatusCode::CREATED, "{res}");
            *done.get_mut(who).unwrap() += 1;
            let earlier: Vec<&str> = plan
                .keys()
                .copied()
                .filter(|o| {
                    *o != who
                        && log
                            .iter()
                            .any(|l| l.labeler == *o && l.response["item_id"] == id.as_str())
                })
                .collect();
            let expect = if earlier.is_empty() {
                "labeled_one"
            } else if earlier.iter().all(|o| plan[o][idx] == verdicts[idx]) {
                "labeled_both"
            } else {
                "disagreement"
            };
            assert_eq!(res["status"], expect, "{id}");
            let (_, view) = call(
                app,
                "GET",
                &format!("/items/{}?labeler={who}", urlencode(&id)),
                None,
            )
            .await;
            log.push(Logged {
                labeler: who.into(),
                had_labeled: true,
                response: view,
            });
            progressed = true;
        }
        if !progressed {
            break;
        }
    }
    assert!(done.values().all(|&n| n == ids.len()));
    log
}

fn urlencode(s: &str) -> String {
    s.replace('/', "%2F")
        .replace(':', "%3A")
        .replace('@', "%40")
}

fn assert_blind(log: &[Logged]) {
    for l in log {
        for label in l.response["labels"].as_array().unwrap() {
            if label["labeler_id"] != l.labeler.as_str() {
                assert!(
                    l.had_labeled,
                    "{} saw {} before labeling",
                    l.labeler, label["labeler_id"]
                );
            }
        }
        if !l.had_labeled {
            assert!(l.response["resolution"].is_null());
        }
    }
}

#[tokio::test]
async fn two_labeler_session() {
    let dir = tempfile::tempdir().unwrap();
    let its = items(20);
    let ids: Vec<String> = its.iter().map(|i| i.item_id.clone()).collect();
    let store = Arc::new(Store::open_or_create(dir.path(), || Ok(its)).unwrap());
    let app = router(store.clone(), None);

    // a: TP except items 0..4; b: TP except items 2..7.
    let a: Vec<bool> = (0..20).map(|i| !(0..4).contains(&i)).collect();
    let b: Vec<bool> = (0..20).map(|i| !(2..7).contains(&i)).collect();
    let plan = BTreeMap::from([("alice", a.clone()), ("bob", b.clone())]);

    let (status, body) = call(&app, "GET", "/summary", None).await;
    assert_eq!(
        (status, body["code"].as_str()),
        (StatusCode::CONFLICT, Some("UnresolvedItems"))
    );

    let log = run_session(&app, &plan, &ids).await;
    assert_blind(&log);

    let count = |x: bool, y: bool| {
        a.iter()
            .zip(&b)
            .filter(|(p, q)| **p == x && **q == y)
            .count() as f64
    };
    let oracle = kappa_oracle(
        count(true, true),
        count(true, false),
        count(false, true),
        count(false, false),
    );
    let (status, k) = call(&app, "GET", "/kappa", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(k["pairs"].as_array().unwrap().len(), 1);
    assert!((k["pairs"][0]["kappa"].as_f64().unwrap() - oracle).abs() < 1e-12);

    let (_, dis) = call(&app, "GET", "/disagreements", None).await;
    let dis = dis.as_array().unwrap();
    let split: Vec<usize> = (0..20).filter(|&i| a[i] != b[i]).collect();
    assert_eq!(dis.len(), split.len());
    for d in dis {
        assert_eq!(d["labels"].as_array().unwrap().len(), 2);
    }

    let (status, _) = call(&app, "GET", "/summary", None).await;
    assert_eq!(status, StatusCode::CONFLICT);

    for &i in &split {
        let (status, res) = call(
            &app,
            "POST",
            "/resolutions",
            Some(json!({"item_id": ids[i], "verdict": "false_positive", "reason": "changed_code_context", "note": "agreed after discussion"})),
        )
        .await;
        assert_eq!(
            (status, res["status"].as_str()),
            (StatusCode::CREATED, Some("resolved"))
        );
    }
    let (status, s) = call(&app, "GET", "/summary", None).await;
    assert_eq!(status, StatusCode::OK);
    let agreed_fp = (0..20).filter(|&i| !a[i] && !b[i]).count();
    assert_eq!(s["total"], 20);
    assert_eq!(
        s["false_positives"].as_u64().unwrap() as usize,
        agreed_fp + split.len()
    );
    assert!(
        (s["false_positive_rate"].as_f64().unwrap() - (agreed_fp + split.len()) as f64 / 20.0)
            .abs()
            < 1e-12
    );

    // Journal holds every item, every label and every resolution, in order.
    let journal = std::fs::read_to_string(dir.path().join("journal.jsonl")).unwrap();
    let entries: Vec<Value> = journal
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let kinds = |k: &str| entries.iter().filter(|e| e["kind"] == k).count();
    assert_eq!(
        (kinds("item"), kinds("label"), kinds("resolution")),
        (20, 40, split.len())
    );
    for e in entries.iter().filter(|e| e["kind"] == "label") {
        let idx = ids.iter().position(|i| e["item_id"] == i.as_str()).unwrap();
        let who = e["labeler_id"].as_str().unwrap();
        assert_eq!(e["verdict"], verdict_json(plan[who][idx]).0);
    }

    drop(app);
    drop(store);
    let reopened = Store::open_or_create(dir.path(), || panic!("journal exists")).unwrap();
    assert_eq!(
        reopened.summary().unwrap(),
        serde_json::from_value(s).unwrap()
    );
}

#[tokio::test]
async fn perfect_agreement_is_one() {
    let its = items(12);
    let ids: Vec<String> = its.iter().map(|i| i.item_id.clone()).collect();
    let app = router(Arc::new(Store::in_memory(its).unwrap()), None);
    let v: Vec<bool> = (0..12).map(|i| i % 3 != 0).collect();
    let plan = BTreeMap::from([("a", v.clone()), ("b", v)]);
    let log = run_session(&app, &plan, &ids).await;
    assert_blind(&log);
    let (_, k) = call(&app, "GET", "/kappa", None).await;
    assert_eq!(k["pairs"][0]["kappa"].as_f64(), Some(1.0));
    let (_, dis) = call(&app, "GET", "/disagreements", None).await;
    assert!(dis.as_array().unwrap().is_empty());
}

#[tokio::test]
async fn three_labelers_get_pairwise_kappa() {
    let its = items(6);
    let ids: Vec<String> = its.iter().map(|i| i.item_id.clone()).collect();
    let app = router(Arc::new(Store::in_memory(its).unwrap()), None);
    let plan = BTreeMap::from([
        ("a", vec![true, true, false, true, false, true]),
        ("b", vec![true, true, false, false, false, true]),
        ("c", vec![true, false, false, true, false, true]),
    ]);
    let log = run_session(&app, &plan, &ids).await;
    assert_blind(&log);
    let (_, k) = call(&app, "GET", "/kappa", None).await;
    let pairs = k["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 3);
    assert_eq!(
        (pairs[0]["a"].as_str(), pairs[0]["b"].as_str()),
        (Some("a"), Some("b"))
    );
}
