//! Read-only access to a local git repository.
//!
//! Everything here walks history along first parents: merge commits are
//! diffed against their first parent and blame never descends into side
//! branches. File renames are detected with git's default similarity
//! threshold (50%) and followed by [`RepoHandle::blame_line`].

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use git2::{Delta, DiffFindOptions, DiffOptions, ErrorCode, Oid, Patch, Repository};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Marker stored in traces and manifests for the history linearization used.
pub const HISTORY_MODE: &str = "first-parent";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CommitRef {
    pub hash: String,
    /// Author date, UTC seconds.
    pub author_date: i64,
    pub parents: Vec<String>,
}

impl CommitRef {
    pub fn short(&self) -> &str {
        &self.hash[..self.hash.len().min(12)]
    }

    pub fn first_parent(&self) -> Option<&str> {
        self.parents.first().map(String::as_str)
    }

    pub fn is_merge(&self) -> bool {
        self.parents.len() > 1
    }

    /// Ordering key used wherever commits are sorted chronologically.
    pub fn date_key(&self) -> (i64, &str) {
        (self.author_date, self.hash.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HunkLine {
    /// Line content including its terminator, if it had one.
    pub text: String,
    /// True for deleted (old side) or added (new side) lines, false for context.
    pub changed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub old_start: usize,
    pub old_lines: Vec<HunkLine>,
    pub new_start: usize,
    pub new_lines: Vec<HunkLine>,
}

impl Hunk {
    /// Deleted lines with their 1-based line numbers in the old file.
    pub fn deleted(&self) -> impl Iterator<Item = (usize, &str)> + '_ {
        self.old_lines
            .iter()
            .enumerate()
            .filter(|(_, l)| l.changed)
            .map(move |(i, l)| (self.old_start + i, l.text.as_str()))
    }

    /// Added lines with their 1-based line numbers in the new file.
    pub fn added(&self) -> impl Iterator<Item = (usize, &str)> + '_ {
        self.new_lines
            .iter()
            .enumerate()
            .filter(|(_, l)| l.changed)
            .map(move |(i, l)| (self.new_start + i, l.text.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDiff {
    pub old_path: Option<String>,
    pub new_path: Option<String>,
    pub hunks: Vec<Hunk>,
    pub rename: bool,
}

/// Rebuild the new side of a file from the old side and a diff's hunks.
pub fn apply_hunks(old: &str, hunks: &[Hunk]) -> String {
    let old_lines: Vec<&str> = old.split_inclusive('\n').collect();
    let mut out = String::with_capacity(old.len());
    let mut cursor = 0usize;
    for hunk in hunks {
        let start = if hunk.old_lines.is_empty() {
            hunk.old_start
        } else {
            hunk.old_start - 1
        };
        for line in &old_lines[cursor..start] {
            out.push_str(line);
        }
        for line in &hunk.new_lines {
            out.push_str(&line.text);
        }
        cursor = start + hunk.old_lines.len();
    }
    for line in &old_lines[cursor..] {
        out.push_str(line);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ChangeKind {
    Added,
    Deleted,
    Modified,
    Renamed,
}

/// One tree-level change of a commit against its first parent.
#[derive(Debug, Clone)]
pub(crate) struct Change {
    pub kind: ChangeKind,
    pub old_path: Option<String>,
    pub new_path: Option<String>,
    pub old_blob: Option<Oid>,
    pub new_blob: Option<Oid>,
}

/// Zero-context hunk headers between two blobs: (old_start, old_count, new_start, new_count).
#[derive(Debug, Default)]
pub(crate) struct LineMap {
    hunks: Vec<(usize, usize, usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LineOrigin {
    /// The line is unchanged and sits at this line number on the old side.
    Unchanged(usize),
    /// The line was added by the hunk at this index.
    Added(usize),
}

impl LineMap {
    pub fn origin_of(&self, new_line: usize) -> LineOrigin {
        let mut delta: isize = 0;
        for (idx, &(_, old_count, new_start, new_count)) in self.hunks.iter().enumerate() {
            let before = if new_count == 0 {
                new_line <= new_start
            } else {
                new_line < new_start
            };
            if before {
                break;
            }
            if new_count > 0 && new_line < new_start + new_count {
                return LineOrigin::Added(idx);
            }
            delta += new_count as isize - old_count as isize;
        }
        LineOrigin::Unchanged((new_line as isize - delta) as usize)
    }

    /// Old-side line numbers deleted by one hunk.
    pub fn deleted_in(&self, hunk: usize) -> std::ops::Range<usize> {
        let (old_start, old_count, _, _) = self.hunks[hunk];
        if old_count == 0 {
            0..0
        } else {
            old_start..old_start + old_count
        }
    }

    pub fn deleted_lines(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.hunks.len()).flat_map(|h| self.deleted_in(h))
    }
}

/// Result of stepping one line from a commit's version to its first parent's version.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum LineStep {
    /// The commit has no parent; the line originates here.
    Root,
    /// The commit added the line.
    Added,
    /// The line is unchanged; this is its location in the parent.
    Unchanged { path: String, line_no: usize },
}

/// A blame attribution: the commit that last modified a line, and where the
/// line sits in that commit's version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlameHit {
    pub commit: CommitRef,
    pub path: String,
    pub line_no: usize,
}

/// Shared handle over one repository. Safe for concurrent reads: each
/// operation borrows a `git2::Repository` from a small pool, and derived
/// data (tree changes, line maps) is memoized.
pub struct RepoHandle {
    path: PathBuf,
    project: String,
    pool: Mutex<Vec<Repository>>,
    changes: Mutex<HashMap<Oid, Arc<Vec<Change>>>>,
    line_maps: Mutex<HashMap<(Oid, Oid), Arc<LineMap>>>,
}

impl std::fmt::Debug for RepoHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RepoHandle")
            .field("path", &self.path)
            .field("project", &self.project)
            .finish()
    }
}

pub fn open_repo(path: impl AsRef<Path>) -> Result<RepoHandle> {
    RepoHandle::open(path)
}

fn classify_open_error(path: &Path, err: git2::Error) -> Error {
    match err.code() {
        ErrorCode::NotFound => Error::NotARepository(path.to_path_buf()),
        _ if err.class() == git2::ErrorClass::Repository && !path.join(".git").exists() => {
            Error::NotARepository(path.to_path_buf())
        }
        _ => Error::RepositoryCorrupt(err.message().to_string()),
    }
}

impl RepoHandle {
    pub fn open(path: impl AsRef<Path>) -> Result<RepoHandle> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::NotARepository(path.to_path_buf()));
        }
        let repo = Repository::open(path).map_err(|e| classify_open_error(path, e))?;
        // Touch the object database so a broken .git fails here rather than mid-trace.
        repo.odb()
            .map_err(|e| Error::RepositoryCorrupt(e.message().to_string()))?;
        let project = path
            .canonicalize()
            .ok()
            .and_then(|p| {
                let p = if p.file_name().is_some_and(|n| n == ".git") {
                    p.parent().map(Path::to_path_buf).unwrap_or(p)
                } else {
                    p
                };
                p.file_name().map(|n| n.to_string_lossy().into_owned())
            })
            .unwrap_or_else(|| "repo".to_string());
        Ok(RepoHandle {
            path: path.to_path_buf(),
            project,
            pool: Mutex::new(vec![repo]),
            changes: Mutex::new(HashMap::new()),
            line_maps: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_project(mut self, project: impl Into<String>) -> Self {
        self.project = project.into();
        self
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn project(&self) -> &str {
        &self.project
    }

    fn with_repo<T>(&self, f: impl FnOnce(&Repository) -> Result<T>) -> Result<T> {
        let repo = self.pool.lock().expect("repo pool poisoned").pop();
        let repo = match repo {
            Some(r) => r,
            None => Repository::open(&self.path).map_err(|e| classify_open_error(&self.path, e))?,
        };
        let out = f(&repo);
        self.pool.lock().expect("repo pool poisoned").push(repo);
        out
    }

    pub(crate) fn oid(hash: &str) -> Result<Oid> {
        Oid::from_str(hash).map_err(|_| Error::UnknownCommit(hash.to_string()))
    }

    fn commit_ref(commit: &git2::Commit<'_>) -> CommitRef {
        CommitRef {
            hash: commit.id().to_string(),
            author_date: commit.author().when().seconds(),
            parents: commit.parent_ids().map(|p| p.to_string()).collect(),
        }
    }

    /// Resolve any revision expression (full or short hash, `HEAD`, branch) to a commit.
    pub fn resolve(&self, rev: &str) -> Result<CommitRef> {
        self.with_repo(|repo| {
            let obj = repo
                .revparse_single(rev)
                .map_err(|_| Error::UnknownCommit(rev.to_string()))?;
            let commit = obj
                .peel_to_commit()
                .map_err(|_| Error::UnknownCommit(rev.to_string()))?;
            Ok(Self::commit_ref(&commit))
        })
    }

    pub fn head(&self) -> Result<CommitRef> {
        self.resolve("HEAD")
    }

    pub fn first_parent(&self, commit: &CommitRef) -> Result<Option<CommitRef>> {
        match commit.first_parent() {
            Some(p) => self.resolve(p).map(Some),
            None => Ok(None),
        }
    }

    pub fn message(&self, commit: &CommitRef) -> Result<String> {
        let oid = Self::oid(&commit.hash)?;
        self.with_repo(|repo| {
            let c = repo
                .find_commit(oid)
                .map_err(|_| Error::UnknownCommit(commit.hash.clone()))?;
            Ok(String::from_utf8_lossy(c.message_bytes()).into_owned())
        })
    }

    /// True when `ancestor` is `descendant` or reachable from it.
    pub fn is_ancestor(&self, ancestor: &CommitRef, descendant: &CommitRef) -> Result<bool> {
        if ancestor.hash == descendant.hash {
            return Ok(true);
        }
        let a = Self::oid(&ancestor.hash)?;
        let d = Self::oid(&descendant.hash)?;
        self.with_repo(|repo| Ok(repo.graph_descendant_of(d, a)?))
    }

    fn blob_id_at(repo: &Repository, commit: Oid, path: &str) -> Result<Option<Oid>> {
        let c = repo
            .find_commit(commit)
            .map_err(|_| Error::UnknownCommit(commit.to_string()))?;
        let tree = c.tree()?;
        match tree.get_path(Path::new(path)) {
            Ok(entry) if entry.kind() == Some(git2::ObjectType::Blob) => Ok(Some(entry.id())),
            Ok(_) => Ok(None),
            Err(e) if e.code() == ErrorCode::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    pub fn file_bytes_at(&self, commit: &CommitRef, path: &str) -> Result<Vec<u8>> {
        let oid = Self::oid(&commit.hash)?;
        self.with_repo(|repo| {
            let blob =
                Self::blob_id_at(repo, oid, path)?.ok_or_else(|| Error::PathMissingAtCommit {
                    commit: commit.hash.clone(),
                    path: path.to_string(),
                })?;
            Ok(repo.find_blob(blob)?.content().to_vec())
        })
    }

    /// File content at a commit, decoded as UTF-8 with lossy replacement.
    pub fn file_at(&self, commit: &CommitRef, path: &str) -> Result<String> {
        let bytes = self.file_bytes_at(commit, path)?;
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }

    pub fn path_exists(&self, commit: &CommitRef, path: &str) -> Result<bool> {
        let oid = Self::oid(&commit.hash)?;
        self.with_repo(|repo| Ok(Self::blob_id_at(repo, oid, path)?.is_some()))
    }

    fn blob_bytes(repo: &Repository, blob: Option<Oid>) -> Result<Vec<u8>> {
        match blob {
            Some(id) => Ok(repo.find_blob(id)?.content().to_vec()),
            None => Ok(Vec::new()),
        }
    }

    pub(crate) fn changes(&self, commit: Oid) -> Result<Arc<Vec<Change>>> {
        if let Some(hit) = self.changes.lock().expect("cache poisoned").get(&commit) {
            return Ok(hit.clone());
        }
        let computed = self.with_repo(|repo| {
            let c = repo
                .find_commit(commit)
                .map_err(|_| Error::UnknownCommit(commit.to_string()))?;
            let new_tree = c.tree()?;
            let old_tree = match c.parent_ids().next() {
                Some(p) => Some(repo.find_commit(p)?.tree()?),
                None => None,
            };
            let mut opts = DiffOptions::new();
            opts.ignore_submodules(true);
            let mut diff =
                repo.diff_tree_to_tree(old_tree.as_ref(), Some(&new_tree), Some(&mut opts))?;
            let mut find = DiffFindOptions::new();
            find.renames(true);
            diff.find_similar(Some(&mut find))?;
            let mut out = Vec::new();
            for delta in diff.deltas() {
                let path_of = |f: git2::DiffFile<'_>| {
                    f.path().map(|p| p.to_string_lossy().replace('\\', "/"))
                };
                let (kind, old_path, new_path) = match delta.status() {
                    Delta::Added | Delta::Copied => {
                        (ChangeKind::Added, None, path_of(delta.new_file()))
                    }
                    Delta::Deleted => (ChangeKind::Deleted, path_of(delta.old_file()), None),
                    Delta::Renamed => (
                        ChangeKind::Renamed,
                        path_of(delta.old_file()),
                        path_of(delta.new_file()),
                    ),
                    Delta::Modified | Delta::Typechange => (
                        ChangeKind::Modified,
                        path_of(delta.old_file()),
                        path_of(delta.new_file()),
                    ),
                    _ => continue,
                };
                let blob = |f: git2::DiffFile<'_>| (!f.id().is_zero()).then(|| f.id());
                let old_blob = if old_path.is_some() {
                    blob(delta.old_file())
                } else {
                    None
                };
                let new_blob = if new_path.is_some() {
                    blob(delta.new_file())
                } else {
                    None
                };
                out.push(Change {
                    kind,
                    old_path,
                    new_path,
                    old_blob,
                    new_blob,
                });
            }
            out.sort_by(|a, b| {
                (a.new_path.as_deref(), a.old_path.as_deref())
                    .cmp(&(b.new_path.as_deref(), b.old_path.as_deref()))
            });
            Ok(Arc::new(out))
        })?;
        self.changes
            .lock()
            .expect("cache poisoned")
            .insert(commit, computed.clone());
        Ok(computed)
    }

    pub(crate) fn line_map(&self, old: Option<Oid>, new: Option<Oid>) -> Result<Arc<LineMap>> {
        let zero = Oid::zero();
        let key = (old.unwrap_or(zero), new.unwrap_or(zero));
        if let Some(hit) = self.line_maps.lock().expect("cache poisoned").get(&key) {
            return Ok(hit.clone());
        }
        let computed = self.with_repo(|repo| {
            let old_bytes = Self::blob_bytes(repo, old)?;
            let new_bytes = Self::blob_bytes(repo, new)?;
            let mut opts = DiffOptions::new();
            opts.context_lines(0).force_text(true);
            let patch = Patch::from_buffers(&old_bytes, None, &new_bytes, None, Some(&mut opts))?;
            let mut hunks = Vec::with_capacity(patch.num_hunks());
            for h in 0..patch.num_hunks() {
                let (hunk, _) = patch.hunk(h)?;
                hunks.push((
                    hunk.old_start() as usize,
                    hunk.old_lines() as usize,
                    hunk.new_start() as usize,
                    hunk.new_lines() as usize,
                ));
            }
            Ok(Arc::new(LineMap { hunks }))
        })?;
        self.line_maps
            .lock()
            .expect("cache poisoned")
            .insert(key, computed.clone());
        Ok(computed)
    }

    pub(crate) fn blob_lines(&self, blob: Option<Oid>) -> Result<Vec<String>> {
        self.with_repo(|repo| {
            let bytes = Self::blob_bytes(repo, blob)?;
            Ok(split_lines(&String::from_utf8_lossy(&bytes)))
        })
    }

    /// Hunks of one file pair, with `context` lines of context.
    fn hunks_between(&self, old: Option<Oid>, new: Option<Oid>, context: u32) -> Result<Vec<Hunk>> {
        self.with_repo(|repo| {
            let old_bytes = Self::blob_bytes(repo, old)?;
            let new_bytes = Self::blob_bytes(repo, new)?;
            let mut opts = DiffOptions::new();
            opts.context_lines(context);
            let patch = Patch::from_buffers(&old_bytes, None, &new_bytes, None, Some(&mut opts))?;
            let mut hunks = Vec::with_capacity(patch.num_hunks());
            for h in 0..patch.num_hunks() {
                let (header, n) = patch.hunk(h)?;
                let mut hunk = Hunk {
                    old_start: header.old_start() as usize,
                    old_lines: Vec::new(),
                    new_start: header.new_start() as usize,
                    new_lines: Vec::new(),
                };
                for l in 0..n {
                    let line = patch.line_in_hunk(h, l)?;
                    let text = String::from_utf8_lossy(line.content()).into_owned();
                    match line.origin() {
                        ' ' => {
                            hunk.old_lines.push(HunkLine {
                                text: text.clone(),
                                changed: false,
                            });
                            hunk.new_lines.push(HunkLine {
                                text,
                                changed: false,
                            });
                        }
                        '-' => hunk.old_lines.push(HunkLine {
                            text,
                            changed: true,
                        }),
                        '+' => hunk.new_lines.push(HunkLine {
                            text,
                            changed: true,
                        }),
                        // end-of-file newline markers carry no content of their own
                        _ => {}
                    }
                }
                hunks.push(hunk);
            }
            Ok(hunks)
        })
    }

    /// Diff of a commit against its first parent (root commits: against the
    /// empty tree), with rename detection and 3 lines of context.
    pub fn diff_commit(&self, commit: &CommitRef) -> Result<Vec<FileDiff>> {
        self.diff_commit_with_context(commit, 3)
    }

    pub fn diff_commit_with_context(
        &self,
        commit: &CommitRef,
        context: u32,
    ) -> Result<Vec<FileDiff>> {
        let oid = Self::oid(&commit.hash)?;
        if commit.is_merge() {
            log::debug!(
                "{} is a merge; diffing against first parent",
                commit.short()
            );
        }
        let changes = self.changes(oid)?;
        let mut out = Vec::with_capacity(changes.len());
        for ch in changes.iter() {
            out.push(FileDiff {
                old_path: ch.old_path.clone(),
                new_path: ch.new_path.clone(),
                hunks: self.hunks_between(ch.old_blob, ch.new_blob, context)?,
                rename: ch.kind == ChangeKind::Renamed,
            });
        }
        Ok(out)
    }

    /// Step a line of `path` at `commit` back to the commit's first parent.
    pub(crate) fn step_line(
        &self,
        commit: &CommitRef,
        path: &str,
        line_no: usize,
    ) -> Result<LineStep> {
        let Some(parent) = commit.first_parent() else {
            return Ok(LineStep::Root);
        };
        let oid = Self::oid(&commit.hash)?;
        let parent_oid = Self::oid(parent)?;
        let same = self.with_repo(|repo| {
            let now = Self::blob_id_at(repo, oid, path)?;
            let before = Self::blob_id_at(repo, parent_oid, path)?;
            Ok(now.is_some() && now == before)
        })?;
        if same {
            return Ok(LineStep::Unchanged {
                path: path.to_string(),
                line_no,
            });
        }
        let changes = self.changes(oid)?;
        let Some(change) = changes.iter().find(|c| c.new_path.as_deref() == Some(path)) else {
            return Ok(LineStep::Unchanged {
                path: path.to_string(),
                line_no,
            });
        };
        if change.kind == ChangeKind::Added {
            return Ok(LineStep::Added);
        }
        let map = self.line_map(change.old_blob, change.new_blob)?;
        Ok(match map.origin_of(line_no) {
            LineOrigin::Added(_) => LineStep::Added,
            LineOrigin::Unchanged(old) => LineStep::Unchanged {
                path: change.old_path.clone().unwrap_or_else(|| path.to_string()),
                line_no: old,
            },
        })
    }

    pub fn line_count(&self, commit: &CommitRef, path: &str) -> Result<usize> {
        Ok(split_lines(&self.file_at(commit, path)?).len())
    }

    /// Line content (without terminator) at a commit.
    pub fn line_at(&self, commit: &CommitRef, path: &str, line_no: usize) -> Result<String> {
        let lines = split_lines(&self.file_at(commit, path)?);
        if line_no == 0 || line_no > lines.len() {
            return Err(Error::LineOutOfRange {
                commit: commit.hash.clone(),
                path: path.to_string(),
                line_no,
                len: lines.len(),
            });
        }
        Ok(lines[line_no - 1].clone())
    }

    /// The most recent first-parent commit at or before `commit` that last
    /// modified the line, with the line's path and number in that commit.
    pub fn blame_line(&self, commit: &CommitRef, path: &str, line_no: usize) -> Result<BlameHit> {
        let len = self.line_count(commit, path)?;
        if line_no == 0 || line_no > len {
            return Err(Error::LineOutOfRange {
                commit: commit.hash.clone(),
                path: path.to_string(),
                line_no,
                len,
            });
        }
        let mut current = commit.clone();
        let mut path = path.to_string();
        let mut line_no = line_no;
        loop {
            match self.step_line(&current, &path, line_no)? {
                LineStep::Root | LineStep::Added => {
                    return Ok(BlameHit {
                        commit: current,
                        path,
                        line_no,
                    })
                }
                LineStep::Unchanged {
                    path: p,
                    line_no: n,
                } => {
                    let parent = current.first_parent().expect("non-root").to_string();
                    current = self.resolve(&parent)?;
                    path = p;
                    line_no = n;
                }
            }
        }
    }

    /// First-parent commits strictly between `from` and `to`, newest first,
    /// that touch any tracked path. Renames discovered on the way extend the
    /// tracked set with the older name.
    pub(crate) fn touching_newest_first(
        &self,
        from: &CommitRef,
        to: &CommitRef,
        paths: &BTreeSet<String>,
    ) -> Result<Vec<CommitRef>> {
        if from.hash == to.hash {
            return Ok(Vec::new());
        }
        if !self.is_ancestor(from, to)? {
            return Err(Error::NotAncestor {
                from: from.hash.clone(),
                to: to.hash.clone(),
            });
        }
        let mut tracked = paths.clone();
        let mut out = Vec::new();
        let mut cursor = self.first_parent(to)?;
        while let Some(commit) = cursor {
            if commit.hash == from.hash {
                return Ok(out);
            }
            if self.touches(&commit, &mut tracked)? {
                out.push(commit.clone());
            }
            cursor = self.first_parent(&commit)?;
        }
        log::warn!(
            "{} is not on the first-parent chain of {}; interval ran to the root",
            from.short(),
            to.short()
        );
        Ok(out)
    }

    fn touches(&self, commit: &CommitRef, tracked: &mut BTreeSet<String>) -> Result<bool> {
        let oid = Self::oid(&commit.hash)?;
        let parent = match commit.first_parent() {
            Some(p) => Some(Self::oid(p)?),
            None => None,
        };
        let all_same = self.with_repo(|repo| {
            for p in tracked.iter() {
                let now = Self::blob_id_at(repo, oid, p)?;
                let before = match parent {
                    Some(par) => Self::blob_id_at(repo, par, p)?,
                    None => None,
                };
                if now != before {
                    return Ok(false);
                }
            }
            Ok(true)
        })?;
        if all_same {
            return Ok(false);
        }
        let changes = self.changes(oid)?;
        let mut touched = false;
        let mut discovered = Vec::new();
        for ch in changes.iter() {
            let hits_new = ch.new_path.as_ref().is_some_and(|p| tracked.contains(p));
            let hits_old = ch.old_path.as_ref().is_some_and(|p| tracked.contains(p));
            if hits_new || hits_old {
                touched = true;
            }
            if hits_new && ch.kind == ChangeKind::Renamed {
                if let Some(old) = &ch.old_path {
                    discovered.push(old.clone());
                }
            }
        }
        tracked.extend(discovered);
        Ok(touched)
    }

    /// Commits strictly after `from` and strictly before `to` touching any of
    /// `paths`, ordered by (author_date, hash).
    pub fn commits_touching(
        &self,
        from: &CommitRef,
        to: &CommitRef,
        paths: &BTreeSet<String>,
    ) -> Result<Vec<CommitRef>> {
        let mut out = self.touching_newest_first(from, to, paths)?;
        out.sort_by(|a, b| a.date_key().cmp(&b.date_key()));
        Ok(out)
    }
}

/// Split text into lines without terminators; a trailing newline does not
/// start an extra empty line.
pub fn split_lines(text: &str) -> Vec<String> {
    text.split_inclusive('\n')
        .map(|l| {
            let l = l.strip_suffix('\n').unwrap_or(l);
            l.strip_suffix('\r').unwrap_or(l).to_string()
        })
        .collect()
}
