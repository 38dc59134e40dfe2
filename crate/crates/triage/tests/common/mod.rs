#![allow(dead_code)]

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use latent_sv::extract::FunctionSnapshot;
use latent_sv::mine::LatentCandidate;
use latent_sv::repo::CommitRef;
use latent_sv_triage::context::item;
use latent_sv_triage::{ItemContext, TriageItem};
use serde_json::Value;
use tower::ServiceExt;

pub fn commit(n: u64) -> CommitRef {
    CommitRef {
        hash: format!("{n:040x}"),
        author_date: 1_600_000_000 + n as i64,
        parents: vec![],
    }
}

/// Candidate `k` descending from fixing commit `vfc`.
pub fn candidate(vfc: u64, k: u64) -> LatentCandidate {
    let origin = format!("{:012x}:src/f.c:fn{vfc}:10", vfc);
    let interm = commit(1000 + vfc * 100 + k);
    LatentCandidate {
        id: format!("{origin}@{}", &interm.hash[..12]),
        origin,
        snapshot: FunctionSnapshot {
            project: "p".into(),
            commit: interm.hash.clone(),
            path: "src/f.c".into(),
            name: format!("fn{vfc}"),
            start_line: 10,
            end_line: 14,
            body: format!("int fn{vfc}(int a) {{\n  return a + {k};\n}}\n"),
            norm_hash: format!("{vfc}-{k}"),
        },
        mapped_vuln_lines: vec![11],
        interm_commit: interm,
        overlap: Default::default(),
        filter_flags: Default::default(),
    }
}

pub fn items(n: u64) -> Vec<TriageItem> {
    (0..n)
        .map(|v| item(&candidate(v, 0), ItemContext::default()))
        .collect()
}

pub async fn call(
    app: &Router,
    method: &str,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(serde_json::to_vec(&b).unwrap())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let json = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes)
            .unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, json)
}

/// Kappa from the 2x2 table, computed directly.
pub fn kappa_oracle(tt: f64, tf: f64, ft: f64, ff: f64) -> f64 {
    let n = tt + tf + ft + ff;
    let po = (tt + ff) / n;
    let a_t = (tt + tf) / n;
    let b_t = (tt + ft) / n;
    let pe = a_t * b_t + (1.0 - a_t) * (1.0 - b_t);
    (po - pe) / (1.0 - pe)
}
