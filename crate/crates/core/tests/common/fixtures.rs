//! Hand-built candidates, commits and traces.

use std::collections::BTreeSet;

use latent_sv::extract::{norm_hash, FunctionSnapshot};
use latent_sv::mine::{LatentCandidate, OverlapClass};
use latent_sv::repo::CommitRef;
use latent_sv::trace::{LineTrace, TraceOrigin};

pub fn commit(tag: usize, date: i64) -> CommitRef {
    CommitRef {
        hash: format!("{tag:040x}"),
        author_date: date,
        parents: vec![],
    }
}

pub fn candidate(i: usize, origin: usize, date: i64) -> LatentCandidate {
    let body = format!("int f{i}(void) {{ return {i}; }}");
    LatentCandidate {
        id: format!("o{origin}@{i}"),
        origin: format!("o{origin}"),
        snapshot: FunctionSnapshot {
            project: "p".into(),
            commit: format!("{:040x}", 1_000_000 + i),
            path: "a.c".into(),
            name: format!("f{i}"),
            start_line: 1,
            end_line: 1,
            norm_hash: norm_hash(body.as_bytes()),
            body,
        },
        mapped_vuln_lines: vec![1],
        interm_commit: commit(i + 100, date),
        overlap: OverlapClass::Unclassified,
        filter_flags: BTreeSet::new(),
    }
}

pub fn trace_to(vic: CommitRef) -> LineTrace {
    LineTrace {
        origin: TraceOrigin {
            vfc: commit(0, 1_000),
            path: "a.c".into(),
            line_no: 1,
        },
        hops: vec![],
        vic,
        history: "first-parent".into(),
    }
}
