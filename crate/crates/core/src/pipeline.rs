//! Stage drivers over a list of fixing commits: extract vulnerable
//! functions, trace their lines, and mine latent versions.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{originals_from_records, LabeledFunction};
use crate::error::{Error, Result};
use crate::mine::{
    classify_all, dedup, mine_latent, LatentCandidate, MatchMode, OverlapIndex, OverlapReport,
};
use crate::repo::RepoHandle;
use crate::trace::{trace_record, vulnerable_lines_of, LineTrace, TraceConfig, VulnRecord};

/// One row of the VFC list: `project,repo_path,commit_hash,dataset_id`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VfcEntry {
    pub project: String,
    pub repo_path: PathBuf,
    pub commit_hash: String,
    #[serde(default)]
    pub dataset_id: Option<String>,
}

/// Read a VFC list. Relative `repo_path`s resolve against the file's directory.
pub fn read_vfc_csv(path: impl AsRef<Path>) -> Result<Vec<VfcEntry>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    for required in ["project", "repo_path", "commit_hash"] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::InvalidConfig(format!(
                "{}: missing column `{required}`",
                path.display()
            )));
        }
    }
    let mut out = Vec::new();
    for row in reader.deserialize::<VfcEntry>() {
        let mut e = row.map_err(|e| csv_error(path, e))?;
        if e.repo_path.is_relative() {
            e.repo_path = base.join(&e.repo_path);
        }
        e.dataset_id = e.dataset_id.filter(|s| !s.is_empty());
        out.push(e);
    }
    if out.is_empty() {
        return Err(Error::EmptyInput("VFC list"));
    }
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::InvalidConfig(format!("{}:{line}: {e}", path.display()))
}

/// Open repositories keyed by project name.
pub struct Repos(BTreeMap<String, RepoHandle>);

impl Repos {
    pub fn open(entries: &[VfcEntry]) -> Result<Repos> {
        let mut map = BTreeMap::new();
        for e in entries {
            if let Some(existing) = map.get(&e.project) {
                let existing: &RepoHandle = existing;
                if existing.path() != e.repo_path {
                    return Err(Error::InvalidConfig(format!(
                        "project `{}` maps to both {} and {}",
                        e.project,
                        existing.path().display(),
                        e.repo_path.display()
                    )));
                }
                continue;
            }
            map.insert(
                e.project.clone(),
                RepoHandle::open(&e.repo_path)?.with_project(&e.project),
            );
        }
        Ok(Repos(map))
    }

    pub fn from_paths(paths: &BTreeMap<String, PathBuf>) -> Result<Repos> {
        let mut map = BTreeMap::new();
        for (project, path) in paths {
            map.insert(
                project.clone(),
                RepoHandle::open(path)?.with_project(project),
            );
        }
        Ok(Repos(map))
    }

    pub fn get(&self, project: &str) -> Result<&RepoHandle> {
        self.0
            .get(project)
            .ok_or_else(|| Error::InvalidConfig(format!("no repository for project `{project}`")))
    }

    pub fn paths(&self) -> BTreeMap<String, PathBuf> {
        self.0
            .iter()
            .map(|(k, v)| (k.clone(), v.path().to_path_buf()))
            .collect()
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

/// Vulnerable functions of every listed fixing commit, in input order.
pub fn extract_records(
    entries: &[VfcEntry],
    repos: &Repos,
    jobs: usize,
) -> Result<Vec<VulnRecord>> {
    let per_entry: Vec<Result<Vec<VulnRecord>>> = pool(jobs)?.install(|| {
        entries
            .par_iter()
            .map(|e| {
                let repo = repos.get(&e.project)?;
                let vfc = repo.resolve(&e.commit_hash)?;
                let diff = repo.diff_commit(&vfc)?;
                let mut records = vulnerable_lines_of(repo, &vfc, &diff)?;
                for r in &mut records {
                    r.source_dataset_id = e.dataset_id.clone();
                }
                Ok(records)
            })
            .collect()
    });
    let mut out = Vec::new();
    for r in per_entry {
        out.extend(r?);
    }
    Ok(out)
}

/// Vulnerable originals plus the non-vulnerable functions of the same files.
pub fn original_functions(records: &[VulnRecord], repos: &Repos) -> Result<Vec<LabeledFunction>> {
    let mut by_project: BTreeMap<&str, Vec<VulnRecord>> = BTreeMap::new();
    for r in records {
        by_project
            .entry(r.function.project.as_str())
            .or_default()
            .push(r.clone());
    }
    let mut out = Vec::new();
    for (project, rs) in by_project {
        out.extend(originals_from_records(repos.get(project)?, &rs)?);
    }
    Ok(out)
}

pub fn trace_records(
    records: &[VulnRecord],
    repos: &Repos,
    cfg: &TraceConfig,
    jobs: usize,
) -> Result<Vec<LineTrace>> {
    cfg.validate()?;
    let per: Vec<Result<Vec<LineTrace>>> = pool(jobs)?.install(|| {
        records
            .par_iter()
            .map(|r| trace_record(repos.get(&r.function.project)?, r, cfg))
            .collect()
    });
    let mut out = Vec::new();
    for t in per {
        out.extend(t?);
    }
    Ok(out)
}

/// Traces grouped by the record whose lines they start from.
pub fn group_traces(
    records: &[VulnRecord],
    traces: &[LineTrace],
) -> HashMap<String, Vec<LineTrace>> {
    let mut index: HashMap<(&str, &str), Vec<&VulnRecord>> = HashMap::new();
    for r in records {
        index
            .entry((r.vfc.hash.as_str(), r.function.path.as_str()))
            .or_default()
            .push(r);
    }
    let mut out: HashMap<String, Vec<LineTrace>> = HashMap::new();
    for t in traces {
        let owner = index
            .get(&(t.origin.vfc.hash.as_str(), t.origin.path.as_str()))
            .and_then(|rs| rs.iter().find(|r| r.function.contains(t.origin.line_no)));
        if let Some(r) = owner {
            out.entry(r.id.clone()).or_default().push(t.clone());
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MiningSummary {
    pub records: usize,
    pub raw: usize,
    pub deduped: usize,
    pub duplicates_removed: usize,
    pub overlap: Option<OverlapReport>,
}

/// Mine, drop repeated bodies, and classify overlap with the originals.
pub fn mine_records(
    records: &[VulnRecord],
    traces: &HashMap<String, Vec<LineTrace>>,
    originals: &[LabeledFunction],
    repos: &Repos,
    cfg: &TraceConfig,
    jobs: usize,
) -> Result<(Vec<LatentCandidate>, MiningSummary)> {
    let per: Vec<Result<Vec<LatentCandidate>>> = pool(jobs)?.install(|| {
        records
            .par_iter()
            .map(|r| {
                let t = traces.get(&r.id).map(Vec::as_slice).unwrap_or(&[]);
                if t.is_empty() {
                    return Err(Error::MissingTrace(r.id.clone()));
                }
                mine_latent(repos.get(&r.function.project)?, r, t, cfg)
            })
            .collect()
    });
    let mut raw = Vec::new();
    for c in per {
        raw.extend(c?);
    }
    let n_raw = raw.len();
    // Copies of original functions stay: their overlap class is reported, and
    // attachment decides what to do with them per split.
    let (mut kept, removed) = dedup(std::iter::empty(), raw);
    let index = OverlapIndex::new(
        MatchMode::Exact,
        originals
            .iter()
            .filter(|f| f.is_vulnerable())
            .map(|f| f.body.as_str()),
        originals
            .iter()
            .filter(|f| !f.is_vulnerable())
            .map(|f| f.body.as_str()),
    );
    classify_all(&mut kept, &index);
    let overlap = if kept.is_empty() {
        None
    } else {
        Some(crate::mine::overlap_report(&kept)?)
    };
    let summary = MiningSummary {
        records: records.len(),
        raw: n_raw,
        deduped: kept.len(),
        duplicates_removed: removed,
        overlap,
    };
    Ok((kept, summary))
}
