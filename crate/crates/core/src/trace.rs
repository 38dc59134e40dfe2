//! Vulnerable-line extraction and introducing-commit tracing.
//!
//! A trace starts from a line deleted by a fixing commit and repeatedly
//! blames it. When the attributed commit only re-indented the line, or moved
//! it (within the file, across a rename, or into another file), the trace
//! steps over that commit onto the line's prior version and blames again. The
//! first commit that added the line with no qualifying prior version is the
//! introducing commit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::{
    enclosing_function, functions_at, is_cosmetic_change_with, CosmeticMode, FunctionSnapshot,
};
use crate::repo::{ChangeKind, CommitRef, FileDiff, LineOrigin, RepoHandle, HISTORY_MODE};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VulnLine {
    pub line_no: usize,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VulnRecord {
    /// `{vfc12}:{path}:{function}:{start_line}`.
    pub id: String,
    pub vfc: CommitRef,
    /// Pre-fix version of the function.
    pub function: FunctionSnapshot,
    pub vuln_lines: Vec<VulnLine>,
    #[serde(default)]
    pub source_dataset_id: Option<String>,
}

impl VulnRecord {
    pub fn make_id(vfc: &CommitRef, function: &FunctionSnapshot) -> String {
        format!(
            "{}:{}:{}:{}",
            vfc.short(),
            function.path,
            function.name,
            function.start_line
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HopKind {
    Blame,
    CosmeticSkip,
    Mapped,
}

/// One step of a trace. A `blame` hop names the commit that last modified
/// the line and the line's location in that commit. A `cosmetic-skip` or
/// `mapped` hop names the commit being stepped over and the location of the
/// line's predecessor in that commit's first parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hop {
    pub commit: CommitRef,
    pub path: String,
    pub line_no: usize,
    pub kind: HopKind,
    pub similarity: Option<f64>,
    pub content: String,
    /// Number of candidate lines that cleared the threshold in the winning search tier.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qualifying: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceOrigin {
    pub vfc: CommitRef,
    pub path: String,
    pub line_no: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineTrace {
    pub origin: TraceOrigin,
    pub hops: Vec<Hop>,
    pub vic: CommitRef,
    pub history: String,
}

impl LineTrace {
    /// The skip or mapped hop that crosses `commit`, if the trace crosses it.
    pub fn crossing(&self, commit: &str) -> Option<&Hop> {
        self.hops
            .iter()
            .find(|h| h.kind != HopKind::Blame && h.commit.hash == commit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraceConfig {
    pub sim_threshold: f64,
    pub max_hops: usize,
    pub cross_file_mapping: bool,
    pub cosmetic: CosmeticMode,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            sim_threshold: 0.75,
            max_hops: 200,
            cross_file_mapping: true,
            cosmetic: CosmeticMode::Whitespace,
        }
    }
}

impl TraceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sim_threshold > 0.0 && self.sim_threshold <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "sim_threshold must be in (0, 1], got {}",
                self.sim_threshold
            )));
        }
        if self.max_hops == 0 {
            return Err(Error::InvalidConfig("max_hops must be positive".into()));
        }
        Ok(())
    }
}

/// `1 - lev(a, b) / max(len a, len b)` over trimmed lines, counted in chars.
pub fn line_similarity(a: &str, b: &str) -> f64 {
    let (a, b) = (a.trim(), b.trim());
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - strsim::levenshtein(a, b) as f64 / longest as f64
}

/// Similarity if it can reach `threshold`; the length difference bounds the
/// edit distance from below, which rules most pairs out cheaply.
fn similarity_at_least(a: &str, b: &str, threshold: f64) -> Option<f64> {
    let (ta, tb) = (a.trim(), b.trim());
    let (la, lb) = (ta.chars().count(), tb.chars().count());
    let longest = la.max(lb);
    if longest > 0 && 1.0 - (la.abs_diff(lb) as f64) / (longest as f64) < threshold {
        return None;
    }
    let sim = line_similarity(ta, tb);
    (sim >= threshold).then_some(sim)
}

pub fn is_cosmetic_line_change(before: &str, after: &str) -> bool {
    crate::extract::is_cosmetic_change(before, after)
}

fn strip_terminator(s: &str) -> &str {
    let s = s.strip_suffix('\n').unwrap_or(s);
    s.strip_suffix('\r').unwrap_or(s)
}

/// Deleted lines of a fixing commit grouped by enclosing pre-fix function.
/// Returns the records and the number of deleted lines that fell outside
/// every function.
pub fn vulnerable_lines_counted(
    repo: &RepoHandle,
    vfc: &CommitRef,
    diff: &[FileDiff],
) -> Result<(Vec<VulnRecord>, usize)> {
    let Some(parent) = repo.first_parent(vfc)? else {
        return Ok((Vec::new(), 0));
    };
    let mut records = Vec::new();
    let mut dropped = 0;
    for file in diff {
        let Some(old_path) = &file.old_path else {
            continue;
        };
        let deleted: Vec<(usize, String)> = file
            .hunks
            .iter()
            .flat_map(|h| {
                h.deleted()
                    .map(|(n, t)| (n, strip_terminator(t).to_string()))
            })
            .collect();
        if deleted.is_empty() {
            continue;
        }
        if !crate::extract::is_c_like(old_path) {
            dropped += deleted.len();
            continue;
        }
        let functions = functions_at(repo, &parent, old_path)?;
        let mut grouped: BTreeMap<usize, Vec<VulnLine>> = BTreeMap::new();
        for (line_no, content) in deleted {
            match enclosing_function(&functions, line_no) {
                Some(f) => grouped
                    .entry(f.start_line)
                    .or_default()
                    .push(VulnLine { line_no, content }),
                None => dropped += 1,
            }
        }
        for (start, vuln_lines) in grouped {
            let function = functions
                .iter()
                .find(|f| f.start_line == start)
                .expect("grouped by an extracted start line")
                .clone();
            records.push(VulnRecord {
                id: VulnRecord::make_id(vfc, &function),
                vfc: vfc.clone(),
                function,
                vuln_lines,
                source_dataset_id: None,
            });
        }
    }
    if dropped > 0 {
        log::info!(
            "{}: {dropped} deleted line(s) outside any function",
            vfc.short()
        );
    }
    Ok((records, dropped))
}

pub fn vulnerable_lines_of(
    repo: &RepoHandle,
    vfc: &CommitRef,
    diff: &[FileDiff],
) -> Result<Vec<VulnRecord>> {
    vulnerable_lines_counted(repo, vfc, diff).map(|(r, _)| r)
}

struct Step {
    kind: HopKind,
    path: String,
    line_no: usize,
    similarity: f64,
    content: String,
    qualifying: usize,
}

struct Candidate {
    path: String,
    line_no: usize,
    text: String,
    sim: f64,
}

impl Candidate {
    fn beats(&self, other: &Candidate, target: usize) -> bool {
        let key = |c: &Candidate| (c.line_no.abs_diff(target), c.line_no);
        match self.sim.partial_cmp(&other.sim) {
            Some(std::cmp::Ordering::Greater) => true,
            Some(std::cmp::Ordering::Less) => false,
            _ => (key(self), &self.path) < (key(other), &other.path),
        }
    }
}

/// Find the predecessor of a line that `commit` added at `path:line_no`.
fn predecessor(
    repo: &RepoHandle,
    commit: &CommitRef,
    path: &str,
    line_no: usize,
    content: &str,
    cfg: &TraceConfig,
) -> Result<Option<Step>> {
    let changes = repo.changes(RepoHandle::oid(&commit.hash)?)?;
    let own = changes
        .iter()
        .find(|c| c.new_path.as_deref() == Some(path) && c.kind != ChangeKind::Added);

    if let Some(ch) = own {
        let map = repo.line_map(ch.old_blob, ch.new_blob)?;
        if let LineOrigin::Added(h) = map.origin_of(line_no) {
            let old_lines = repo.blob_lines(ch.old_blob)?;
            let skip = map
                .deleted_in(h)
                .filter(|&m| {
                    let old = &old_lines[m - 1];
                    old != content && is_cosmetic_change_with(old, content, cfg.cosmetic)
                })
                .min_by_key(|&m| (m.abs_diff(line_no), m));
            if let Some(m) = skip {
                let before = old_lines[m - 1].clone();
                return Ok(Some(Step {
                    kind: HopKind::CosmeticSkip,
                    path: ch.old_path.clone().unwrap_or_else(|| path.to_string()),
                    line_no: m,
                    similarity: line_similarity(&before, content),
                    content: before,
                    qualifying: 1,
                }));
            }
        }
    }

    let same_path: Vec<_> = changes
        .iter()
        .filter(|c| c.old_path.as_deref() == Some(path) && c.old_blob.is_some())
        .collect();
    let partner: Vec<_> = own
        .filter(|c| c.kind == ChangeKind::Renamed && c.old_path.as_deref() != Some(path))
        .into_iter()
        .collect();
    let others: Vec<_> = if cfg.cross_file_mapping {
        changes
            .iter()
            .filter(|c| {
                c.old_blob.is_some()
                    && c.old_path.as_deref() != Some(path)
                    && !partner.iter().any(|p| std::ptr::eq(*p, *c))
            })
            .collect()
    } else {
        Vec::new()
    };

    for tier in [same_path, partner, others] {
        let mut best: Option<Candidate> = None;
        let mut qualifying = 0;
        for ch in tier {
            let map = repo.line_map(ch.old_blob, ch.new_blob)?;
            let old_lines = repo.blob_lines(ch.old_blob)?;
            let old_path = ch.old_path.as_deref().unwrap_or(path);
            for m in map.deleted_lines() {
                let Some(text) = old_lines.get(m - 1) else {
                    continue;
                };
                let Some(sim) = similarity_at_least(text, content, cfg.sim_threshold) else {
                    continue;
                };
                qualifying += 1;
                let cand = Candidate {
                    path: old_path.to_string(),
                    line_no: m,
                    text: text.clone(),
                    sim,
                };
                if best.as_ref().is_none_or(|b| cand.beats(b, line_no)) {
                    best = Some(cand);
                }
            }
        }
        if let Some(c) = best {
            let kind =
                if c.text != content && is_cosmetic_change_with(&c.text, content, cfg.cosmetic) {
                    HopKind::CosmeticSkip
                } else {
                    HopKind::Mapped
                };
            return Ok(Some(Step {
                kind,
                path: c.path,
                line_no: c.line_no,
                similarity: c.sim,
                content: c.text,
                qualifying,
            }));
        }
    }
    Ok(None)
}

/// Trace one line deleted by `vfc` (located at `path:line_no` in the fix's
/// first parent) back to the commit that introduced it.
pub fn trace_line(
    repo: &RepoHandle,
    vfc: &CommitRef,
    path: &str,
    line_no: usize,
    cfg: &TraceConfig,
) -> Result<LineTrace> {
    cfg.validate()?;
    let origin = TraceOrigin {
        vfc: vfc.clone(),
        path: path.to_string(),
        line_no,
    };
    let Some(mut at) = repo.first_parent(vfc)? else {
        return Err(Error::LineOutOfRange {
            commit: vfc.hash.clone(),
            path: path.to_string(),
            line_no,
            len: 0,
        });
    };
    let mut path = path.to_string();
    let mut line_no = line_no;
    let mut hops = Vec::new();
    loop {
        if hops.len() >= cfg.max_hops {
            return Err(Error::HopLimitExceeded {
                origin: format!("{}:{}:{}", vfc.short(), origin.path, origin.line_no),
                limit: cfg.max_hops,
            });
        }
        let hit = repo.blame_line(&at, &path, line_no)?;
        let content = repo.line_at(&hit.commit, &hit.path, hit.line_no)?;
        hops.push(Hop {
            commit: hit.commit.clone(),
            path: hit.path.clone(),
            line_no: hit.line_no,
            kind: HopKind::Blame,
            similarity: None,
            content: content.clone(),
            qualifying: None,
        });
        let Some(parent) = repo.first_parent(&hit.commit)? else {
            break;
        };
        let Some(step) = predecessor(repo, &hit.commit, &hit.path, hit.line_no, &content, cfg)?
        else {
            break;
        };
        if hops.len() >= cfg.max_hops {
            return Err(Error::HopLimitExceeded {
                origin: format!("{}:{}:{}", vfc.short(), origin.path, origin.line_no),
                limit: cfg.max_hops,
            });
        }
        hops.push(Hop {
            commit: hit.commit.clone(),
            path: step.path.clone(),
            line_no: step.line_no,
            kind: step.kind,
            similarity: Some(step.similarity),
            content: step.content,
            qualifying: Some(step.qualifying),
        });
        at = parent;
        path = step.path;
        line_no = step.line_no;
    }
    let vic = hops.last().expect("at least one blame hop").commit.clone();
    Ok(LineTrace {
        origin,
        hops,
        vic,
        history: HISTORY_MODE.to_string(),
    })
}

/// Traces for every vulnerable line of a record, in line order.
pub fn trace_record(
    repo: &RepoHandle,
    record: &VulnRecord,
    cfg: &TraceConfig,
) -> Result<Vec<LineTrace>> {
    record
        .vuln_lines
        .iter()
        .map(|l| trace_line(repo, &record.vfc, &record.function.path, l.line_no, cfg))
        .collect()
}

pub fn earliest_vic(traces: &[LineTrace]) -> Result<CommitRef> {
    traces
        .iter()
        .map(|t| &t.vic)
        .min_by(|a, b| a.date_key().cmp(&b.date_key()))
        .cloned()
        .ok_or(Error::EmptyInput("traces"))
}

pub fn latest_vic(traces: &[LineTrace]) -> Result<CommitRef> {
    traces
        .iter()
        .map(|t| &t.vic)
        .max_by(|a, b| a.date_key().cmp(&b.date_key()))
        .cloned()
        .ok_or(Error::EmptyInput("traces"))
}
