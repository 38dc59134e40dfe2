//! Latent vulnerable function versions.
//!
//! Between a record's earliest introducing commit and its fixing commit,
//! every commit that changed the function leaves behind a pre-image that
//! still carries the vulnerable lines. Mining walks those commits newest
//! first, carrying each vulnerable line's position backwards, and emits the
//! enclosing function of every pre-image that differs from its successor.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::{functions_at, normalize_body, FunctionSnapshot};
use crate::repo::{CommitRef, LineStep, RepoHandle};
use crate::trace::{earliest_vic, line_similarity, LineTrace, TraceConfig, VulnRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapClass {
    OriginallyVulnerable,
    OriginallyNonvulnerable,
    Missing,
    #[default]
    Unclassified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterFlag {
    LicKeep,
    StKeep,
    CrKeep,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatentCandidate {
    /// `{origin}@{interm12}`.
    pub id: String,
    /// Id of the originating [`VulnRecord`].
    pub origin: String,
    pub snapshot: FunctionSnapshot,
    /// Absolute line numbers in the snapshot's file.
    pub mapped_vuln_lines: Vec<usize>,
    pub interm_commit: CommitRef,
    #[serde(default)]
    pub overlap: OverlapClass,
    #[serde(default)]
    pub filter_flags: BTreeSet<FilterFlag>,
}

impl LatentCandidate {
    /// Mapped lines relative to the snapshot, 1-based.
    pub fn relative_vuln_lines(&self) -> Vec<usize> {
        self.mapped_vuln_lines
            .iter()
            .map(|n| n - self.snapshot.start_line + 1)
            .collect()
    }
}

/// Where one vulnerable line sits in the version currently being examined.
#[derive(Debug, Clone)]
struct Tracked {
    original: String,
    trace: usize,
    at: Option<(String, usize)>,
}

fn step_across(
    repo: &RepoHandle,
    commit: &CommitRef,
    trace: &LineTrace,
    path: &str,
    line_no: usize,
) -> Result<Option<(String, usize)>> {
    Ok(match repo.step_line(commit, path, line_no)? {
        LineStep::Unchanged { path, line_no } => Some((path, line_no)),
        LineStep::Root => None,
        LineStep::Added => trace
            .crossing(&commit.hash)
            .map(|h| (h.path.clone(), h.line_no)),
    })
}

fn pick_function<'a>(
    functions: &'a BTreeMap<String, Vec<FunctionSnapshot>>,
    lines: &[(String, usize)],
    preferred_name: &str,
) -> Option<&'a FunctionSnapshot> {
    let mut best: Option<(&FunctionSnapshot, usize)> = None;
    for f in functions.values().flatten() {
        let hits = lines
            .iter()
            .filter(|(p, n)| *p == f.path && f.contains(*n))
            .count();
        if hits == 0 {
            continue;
        }
        let better = match best {
            None => true,
            Some((b, bh)) => {
                let key = |f: &FunctionSnapshot, h: usize| {
                    (
                        std::cmp::Reverse(h),
                        f.name != preferred_name,
                        f.start_line,
                        f.path.clone(),
                    )
                };
                key(f, hits) < key(b, bh)
            }
        };
        if better {
            best = Some((f, hits));
        }
    }
    best.map(|(f, _)| f)
}

/// Latent versions of one record, in reverse chronological order of their
/// intermediate commit.
pub fn mine_latent(
    repo: &RepoHandle,
    record: &VulnRecord,
    traces: &[LineTrace],
    cfg: &TraceConfig,
) -> Result<Vec<LatentCandidate>> {
    if traces.is_empty() {
        return Err(Error::MissingTrace(record.id.clone()));
    }
    let vic = earliest_vic(traces)?;
    if record.vfc.first_parent() == Some(vic.hash.as_str()) {
        return Ok(Vec::new());
    }
    let mut paths: BTreeSet<String> = BTreeSet::from([record.function.path.clone()]);
    for t in traces {
        paths.extend(t.hops.iter().map(|h| h.path.clone()));
    }
    let interval = repo.touching_newest_first(&vic, &record.vfc, &paths)?;

    let mut tracked: Vec<Tracked> = traces
        .iter()
        .enumerate()
        .map(|(i, t)| Tracked {
            original: record
                .vuln_lines
                .iter()
                .find(|l| l.line_no == t.origin.line_no)
                .map(|l| l.content.clone())
                .unwrap_or_else(|| t.hops[0].content.clone()),
            trace: i,
            at: Some((t.origin.path.clone(), t.origin.line_no)),
        })
        .collect();

    let mut post_body = record.function.body.clone();
    let mut post_name = record.function.name.clone();
    let mut out = Vec::new();
    for commit in interval {
        for t in tracked.iter_mut() {
            if let Some((p, n)) = t.at.take() {
                t.at = step_across(repo, &commit, &traces[t.trace], &p, n)?;
            }
        }
        let alive: Vec<(String, usize, &str)> = tracked
            .iter()
            .filter_map(|t| {
                t.at.as_ref()
                    .map(|(p, n)| (p.clone(), *n, t.original.as_str()))
            })
            .collect();
        if alive.is_empty() {
            break;
        }
        let parent = repo
            .first_parent(&commit)?
            .expect("interior commits have a parent");
        let mut functions: BTreeMap<String, Vec<FunctionSnapshot>> = BTreeMap::new();
        for (p, _, _) in &alive {
            if !functions.contains_key(p) {
                functions.insert(p.clone(), functions_at(repo, &parent, p)?);
            }
        }
        let positions: Vec<(String, usize)> =
            alive.iter().map(|(p, n, _)| (p.clone(), *n)).collect();
        let Some(function) = pick_function(&functions, &positions, &post_name).cloned() else {
            continue;
        };
        let mut mapped: Vec<usize> = Vec::new();
        for (p, n, original) in &alive {
            if *p != function.path || !function.contains(*n) {
                continue;
            }
            let line = function.line(*n).unwrap_or_default();
            let sim = line_similarity(&normalize_body(line), &normalize_body(original));
            if sim >= cfg.sim_threshold {
                mapped.push(*n);
            }
        }
        mapped.sort_unstable();
        mapped.dedup();
        let changed = function.body != post_body;
        post_body = function.body.clone();
        post_name = function.name.clone();
        if !changed || mapped.is_empty() {
            continue;
        }
        out.push(LatentCandidate {
            id: format!("{}@{}", record.id, commit.short()),
            origin: record.id.clone(),
            snapshot: function,
            mapped_vuln_lines: mapped,
            interm_commit: commit,
            overlap: OverlapClass::Unclassified,
            filter_flags: BTreeSet::new(),
        });
    }
    Ok(out)
}

/// Drop candidates whose normalized body repeats an original or an earlier
/// candidate. Survivors are ordered by intermediate commit date; the second
/// value is the number removed.
pub fn dedup<'a>(
    original_hashes: impl IntoIterator<Item = &'a str>,
    mut candidates: Vec<LatentCandidate>,
) -> (Vec<LatentCandidate>, usize) {
    let mut seen: HashSet<String> = original_hashes.into_iter().map(str::to_string).collect();
    candidates.sort_by(|a, b| {
        a.interm_commit
            .date_key()
            .cmp(&b.interm_commit.date_key())
            .then_with(|| a.id.cmp(&b.id))
    });
    let before = candidates.len();
    candidates.retain(|c| seen.insert(c.snapshot.norm_hash.clone()));
    let removed = before - candidates.len();
    (candidates, removed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Byte-identical bodies.
    #[default]
    Exact,
    /// Bodies equal after whitespace normalization.
    Normalized,
}

/// Bodies of the original dataset, split by label.
#[derive(Debug, Clone, Default)]
pub struct OverlapIndex {
    mode: MatchMode,
    vulnerable: HashSet<String>,
    nonvulnerable: HashSet<String>,
}

impl OverlapIndex {
    pub fn new<'a>(
        mode: MatchMode,
        vulnerable: impl IntoIterator<Item = &'a str>,
        nonvulnerable: impl IntoIterator<Item = &'a str>,
    ) -> Self {
        let key = |b: &str| Self::key_for(mode, b);
        OverlapIndex {
            mode,
            vulnerable: vulnerable.into_iter().map(key).collect(),
            nonvulnerable: nonvulnerable.into_iter().map(key).collect(),
        }
    }

    fn key_for(mode: MatchMode, body: &str) -> String {
        match mode {
            MatchMode::Exact => body.to_string(),
            MatchMode::Normalized => normalize_body(body),
        }
    }

    /// Class of a body, and whether it appeared under both labels.
    pub fn classify_body(&self, body: &str) -> (OverlapClass, bool) {
        let key = Self::key_for(self.mode, body);
        let v = self.vulnerable.contains(&key);
        let n = self.nonvulnerable.contains(&key);
        let class = if v {
            OverlapClass::OriginallyVulnerable
        } else if n {
            OverlapClass::OriginallyNonvulnerable
        } else {
            OverlapClass::Missing
        };
        (class, v && n)
    }
}

pub fn classify_overlap(candidate: &LatentCandidate, index: &OverlapIndex) -> OverlapClass {
    index.classify_body(&candidate.snapshot.body).0
}

/// Classify candidates in place; returns the number found under both labels.
pub fn classify_all(candidates: &mut [LatentCandidate], index: &OverlapIndex) -> usize {
    let mut conflicts = 0;
    for c in candidates.iter_mut() {
        let (class, conflict) = index.classify_body(&c.snapshot.body);
        c.overlap = class;
        conflicts += usize::from(conflict);
    }
    if conflicts > 0 {
        log::warn!("{conflicts} candidate(s) match both vulnerable and non-vulnerable originals; counted as vulnerable");
    }
    conflicts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub n_originally_vulnerable: usize,
    pub n_originally_nonvulnerable: usize,
    pub n_missing: usize,
    pub total: usize,
    /// Percent of total, in the order vulnerable, non-vulnerable, missing.
    pub percentages: [f64; 3],
}

pub fn overlap_report(classified: &[LatentCandidate]) -> Result<OverlapReport> {
    let mut counts: HashMap<OverlapClass, usize> = HashMap::new();
    for c in classified {
        *counts.entry(c.overlap).or_default() += 1;
    }
    if let Some(&n) = counts.get(&OverlapClass::Unclassified) {
        return Err(Error::UnclassifiedPresent(n));
    }
    let get = |k| counts.get(&k).copied().unwrap_or(0);
    let (v, n, m) = (
        get(OverlapClass::OriginallyVulnerable),
        get(OverlapClass::OriginallyNonvulnerable),
        get(OverlapClass::Missing),
    );
    let total = classified.len();
    let pct = |x: usize| {
        if total == 0 {
            0.0
        } else {
            100.0 * x as f64 / total as f64
        }
    };
    Ok(OverlapReport {
        n_originally_vulnerable: v,
        n_originally_nonvulnerable: n,
        n_missing: m,
        total,
        percentages: [pct(v), pct(n), pct(m)],
    })
}
