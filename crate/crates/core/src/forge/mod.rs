//! Synthetic git histories with a known answer.
//!
//! A [`HistorySpec`] is a list of scripted [`Event`]s applied to an in-memory
//! C code base, one commit per event, on top of an initial import. The
//! generator writes the repository, then derives a [`GroundTruth`] from the
//! model: for every planted vulnerability the commit that introduced it, the
//! commit a first-parent tracer should report, the fixing commit, and every
//! intermediate version of the vulnerable function a miner should recover.
//! Commit author dates start at [`BASE_DATE`] and advance one hour per commit.
//!
//! Output layout of [`generate`]:
//!
//! ```text
//! out_dir/repo/               the repository, `main` checked out
//! out_dir/ground_truth.json   GroundTruth
//! out_dir/vfcs.csv            project,repo_path,commit_hash,dataset_id
//! ```
//!
//! Line numbers in the ground truth are 1-based file line numbers in the
//! revision named next to them: `lines` are in the fixing commit's parent,
//! latent `line_nos` in `snapshot_commit`.

pub mod corpus;
mod model;
pub mod presets;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use git2::{Oid, Repository, Signature, Time};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::extract_functions;
use crate::repo::RepoHandle;
use model::{header_text, reindent, File, Function, Line, Model, Namer, Tag};

pub use presets::{preset, preset_names};

/// Author date of the initial commit (2020-01-01T00:00:00Z).
pub const BASE_DATE: i64 = 1_577_836_800;
pub const COMMIT_SPACING: i64 = 3600;
pub const BRANCH: &str = "refs/heads/main";

fn default_statements() -> usize {
    4
}

fn default_initial_file() -> String {
    "src/util.c".to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    AddFunction {
        path: String,
        name: String,
        #[serde(default = "default_statements")]
        statements: usize,
    },
    /// Replace one ordinary statement of a function.
    EditLine {
        function: String,
    },
    /// Re-indent the vulnerable lines of `vid`, or the whole body if absent.
    WhitespaceEdit {
        function: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        vid: Option<usize>,
    },
    RenameFile {
        from: String,
        to: String,
    },
    RenameFunction {
        from: String,
        to: String,
    },
    /// Move a function to the end of another (possibly new) file.
    MoveFunctionToFile {
        function: String,
        to: String,
    },
    /// Move the block spanning the vulnerable lines of `vid` into a new
    /// function appended to the same file, leaving a call behind.
    ExtractMethod {
        function: String,
        vid: usize,
        new_name: String,
    },
    /// Plant a line that a later `IntroduceVuln` replaces with a
    /// near-identical vulnerable twin.
    PlantDecoy {
        vid: usize,
        function: String,
    },
    /// Add one vulnerable line. `guarded` also adds a guard block above it.
    IntroduceVuln {
        vid: usize,
        function: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        template: Option<String>,
        #[serde(default)]
        guarded: bool,
    },
    RemoveGuard {
        vid: usize,
    },
    FixVuln {
        vid: usize,
    },
}

impl Event {
    pub fn label(&self) -> &'static str {
        match self {
            Event::AddFunction { .. } => "add_function",
            Event::EditLine { .. } => "edit_line",
            Event::WhitespaceEdit { .. } => "whitespace_edit",
            Event::RenameFile { .. } => "rename_file",
            Event::RenameFunction { .. } => "rename_function",
            Event::MoveFunctionToFile { .. } => "move_function_to_file",
            Event::ExtractMethod { .. } => "extract_method",
            Event::PlantDecoy { .. } => "plant_decoy",
            Event::IntroduceVuln { .. } => "introduce_vuln",
            Event::RemoveGuard { .. } => "remove_guard",
            Event::FixVuln { .. } => "fix_vuln",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistorySpec {
    pub name: String,
    pub seed: u64,
    /// Helper functions in the initial import.
    #[serde(default)]
    pub n_functions: usize,
    #[serde(default = "default_initial_file")]
    pub initial_file: String,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FpReason {
    IncorrectLineMapping,
    ChangedCodeContext,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForgedCommit {
    pub hash: String,
    pub author_date: i64,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<Event>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineTruth {
    pub line_no: usize,
    pub content: String,
    /// Commit that made this line vulnerable.
    pub introduced_by: String,
    /// Commit a tracer following whitespace edits and moves ends at.
    pub traced_to: String,
    /// Commit that last changed the line's text or location.
    pub last_modified_by: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatentTruth {
    /// The intermediate commit that changed this version.
    pub commit: String,
    /// Parent of `commit`, where the version lives.
    pub snapshot_commit: String,
    pub path: String,
    pub function: String,
    pub line_nos: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedFalsePositive {
    #[serde(flatten)]
    pub latent: LatentTruth,
    pub reason: FpReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedVulnerability {
    pub vid: usize,
    pub vic_hash: String,
    /// Earliest `traced_to` over the lines; differs from `vic_hash` only in traps.
    pub tracer_vic_hash: String,
    pub vfc_hash: String,
    pub path: String,
    pub function: String,
    pub start_line: usize,
    pub lines: Vec<LineTruth>,
    /// Truly vulnerable versions, newest first.
    pub latents: Vec<LatentTruth>,
    /// Versions a miner will also emit that are not vulnerable, newest first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expected_false_positives: Vec<ExpectedFalsePositive>,
}

impl PlantedVulnerability {
    /// Every version a miner emits: latents and expected false positives.
    pub fn mined(&self) -> BTreeSet<LatentTruth> {
        self.latents
            .iter()
            .cloned()
            .chain(
                self.expected_false_positives
                    .iter()
                    .map(|f| f.latent.clone()),
            )
            .collect()
    }

    pub fn is_trap(&self) -> bool {
        !self.expected_false_positives.is_empty() || self.vic_hash != self.tracer_vic_hash
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub name: String,
    pub seed: u64,
    pub project: String,
    pub head: String,
    pub commits: Vec<ForgedCommit>,
    pub vulnerabilities: Vec<PlantedVulnerability>,
}

impl GroundTruth {
    pub fn load(path: impl AsRef<Path>) -> Result<GroundTruth> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        std::fs::write(path, bytes)?;
        Ok(())
    }

    pub fn vfcs_csv(&self, repo_path: &str) -> String {
        let mut out = String::from("project,repo_path,commit_hash,dataset_id\n");
        for v in &self.vulnerabilities {
            out.push_str(&format!(
                "{},{},{},{}-{}-v{}\n",
                self.project, repo_path, v.vfc_hash, self.name, self.seed, v.vid
            ));
        }
        out
    }
}

#[derive(Debug, Default)]
struct Book {
    introduced: BTreeSet<usize>,
    fixed_at: BTreeMap<usize, usize>,
    guard_removed_at: BTreeMap<usize, usize>,
}

fn invalid(at: usize, msg: impl std::fmt::Display) -> Error {
    Error::InvalidSpec(format!("event {}: {msg}", at - 1))
}

fn module_of(path: &str) -> String {
    let file = path.rsplit('/').next().unwrap_or(path);
    format!("module {}", file.split('.').next().unwrap_or(file))
}

fn valid_ident(name: &str) -> bool {
    let mut chars = name.chars();
    chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn valid_path(path: &str) -> bool {
    !path.is_empty()
        && !path.starts_with('/')
        && path
            .split('/')
            .all(|p| !p.is_empty() && p != "." && p != "..")
        && !path.contains(['\\', ',', '\n'])
        && crate::extract::is_c_like(path)
}

fn insertion_point(f: &Function, rng: &mut ChaCha8Rng) -> usize {
    let (first, _) = f.body_range();
    rng.gen_range(first..=f.return_index())
}

fn apply(
    model: &mut Model,
    event: &Event,
    at: usize,
    namer: &mut Namer,
    book: &mut Book,
) -> Result<String> {
    let need_fn = |model: &Model, name: &str| {
        model
            .find(name)
            .map(|p| (p.path.to_string(), p.index))
            .ok_or_else(|| invalid(at, format!("unknown function {name}")))
    };
    let fresh_name = |model: &Model, name: &str| {
        if !valid_ident(name) {
            return Err(invalid(at, format!("{name:?} is not an identifier")));
        }
        if model.find(name).is_some() {
            return Err(invalid(at, format!("function {name} already exists")));
        }
        Ok(())
    };
    let live_vid = |book: &Book, vid: usize| {
        if book.fixed_at.contains_key(&vid) {
            Err(invalid(at, format!("vulnerability {vid} is already fixed")))
        } else {
            Ok(())
        }
    };
    Ok(match event {
        Event::AddFunction {
            path,
            name,
            statements,
        } => {
            fresh_name(model, name)?;
            if !valid_path(path) {
                return Err(invalid(at, format!("unusable path {path:?}")));
            }
            let params = namer.params();
            let body = namer.statements((*statements).max(1));
            model
                .files
                .entry(path.clone())
                .or_insert_with(|| File::new(&module_of(path), at))
                .functions
                .push(Function::new(name, params, body, at));
            format!("Add {name} to {path}")
        }
        Event::EditLine { function } => {
            need_fn(model, function)?;
            let stmt = namer.statement();
            let f = model.function_mut(function).expect("checked");
            let plain: Vec<usize> = (0..f.lines.len())
                .filter(|&i| f.lines[i].tag == Tag::Plain)
                .collect();
            if plain.is_empty() {
                let i = f.return_index();
                f.lines.insert(i, Line::new(stmt, at, Tag::Plain));
            } else {
                let i = plain[namer.rng.gen_range(0..plain.len())];
                f.lines[i] = Line::new(stmt, at, Tag::Plain);
            }
            format!("Update {function}")
        }
        Event::WhitespaceEdit { function, vid } => {
            need_fn(model, function)?;
            let f = model.function_mut(function).expect("checked");
            let (first, close) = f.body_range();
            let targets: Vec<usize> = match vid {
                Some(v) => (first..close)
                    .filter(|&i| f.lines[i].is_tracked_for(*v))
                    .collect(),
                None => (first..close).collect(),
            };
            if targets.is_empty() {
                return Err(invalid(at, format!("nothing to re-indent in {function}")));
            }
            for i in targets {
                let l = &mut f.lines[i];
                l.text = reindent(&l.text);
                l.last = at;
            }
            format!("Reformat {function}")
        }
        Event::RenameFile { from, to } => {
            if !valid_path(to) || model.files.contains_key(to) {
                return Err(invalid(at, format!("cannot rename to {to:?}")));
            }
            let file = model
                .files
                .remove(from)
                .ok_or_else(|| invalid(at, format!("unknown file {from}")))?;
            model.files.insert(to.clone(), file);
            format!("Rename {from} to {to}")
        }
        Event::RenameFunction { from, to } => {
            need_fn(model, from)?;
            fresh_name(model, to)?;
            let f = model.function_mut(from).expect("checked");
            f.name = to.clone();
            f.lines[0] = Line::new(header_text(to, &f.params), at, Tag::Header);
            format!("Rename {from} to {to}")
        }
        Event::MoveFunctionToFile { function, to } => {
            let (path, index) = need_fn(model, function)?;
            if *to == path || !valid_path(to) {
                return Err(invalid(at, format!("cannot move {function} to {to:?}")));
            }
            let mut f = model
                .files
                .get_mut(&path)
                .expect("found")
                .functions
                .remove(index);
            for l in &mut f.lines {
                l.last = at;
            }
            model
                .files
                .entry(to.clone())
                .or_insert_with(|| File::new(&module_of(to), at))
                .functions
                .push(f);
            format!("Move {function} to {to}")
        }
        Event::ExtractMethod {
            function,
            vid,
            new_name,
        } => {
            let (path, index) = need_fn(model, function)?;
            fresh_name(model, new_name)?;
            let call = namer.call(new_name);
            let file = model.files.get_mut(&path).expect("found");
            let f = &mut file.functions[index];
            let hits: Vec<usize> = (0..f.lines.len())
                .filter(|&i| f.lines[i].is_tracked_for(*vid))
                .collect();
            let (Some(&lo), Some(&hi)) = (hits.first(), hits.last()) else {
                return Err(invalid(
                    at,
                    format!("{function} holds no lines of vulnerability {vid}"),
                ));
            };
            let block_len = hi - lo + 1;
            let after = f.lines.len() - 1 - (hi + 1);
            if block_len > after {
                return Err(invalid(
                    at,
                    format!("extracted block of {block_len} lines needs at least as many lines after it"),
                ));
            }
            let mut block: Vec<Line> = f
                .lines
                .splice(lo..=hi, [Line::new(call, at, Tag::Call)])
                .collect();
            for l in &mut block {
                l.last = at;
            }
            let params = "Context *ctx".to_string();
            let mut lines = vec![
                Line::new(header_text(new_name, &params), at, Tag::Header),
                Line::new("{", at, Tag::Open),
            ];
            lines.extend(block);
            lines.push(Line::new("    return 0;", at, Tag::Return));
            lines.push(Line::new("}", at, Tag::Close));
            file.functions.push(Function {
                name: new_name.clone(),
                params,
                lines,
            });
            format!("Extract {new_name} from {function}")
        }
        Event::PlantDecoy { vid, function } => {
            need_fn(model, function)?;
            if book.introduced.contains(vid) || model_has_vid(model, *vid) {
                return Err(invalid(
                    at,
                    format!("vulnerability {vid} already has lines"),
                ));
            }
            let (decoy, twin, fix) = namer.decoy_triple();
            let f = model.function_mut(function).expect("checked");
            let i = insertion_point(f, &mut namer.rng);
            f.lines.insert(
                i,
                Line::new(
                    decoy,
                    at,
                    Tag::Decoy {
                        vid: *vid,
                        planted: at,
                        twin,
                        fix,
                    },
                ),
            );
            format!("Parse extra header field in {function}")
        }
        Event::IntroduceVuln {
            vid,
            function,
            template,
            guarded,
        } => {
            live_vid(book, *vid)?;
            let (path, index) = need_fn(model, function)?;
            if let Some(other) = model.locate_tracked(*vid) {
                if other.function != *function {
                    return Err(invalid(
                        at,
                        format!("vulnerability {vid} already lives in {}", other.function),
                    ));
                }
            }
            let decoy = model.files[&path].functions[index]
                .lines
                .iter()
                .position(|l| matches!(l.tag, Tag::Decoy { vid: v, .. } if v == *vid));
            let (text, fix) = match template {
                Some(t) => {
                    let t = if t.starts_with([' ', '\t']) {
                        t.clone()
                    } else {
                        format!("    {t}")
                    };
                    (t, namer.custom_fix())
                }
                None => namer.vuln_pair(),
            };
            let guard = guarded.then(|| namer.guard());
            let f = model.function_mut(function).expect("checked");
            if let Some(i) = decoy {
                let Tag::Decoy {
                    planted, twin, fix, ..
                } = f.lines[i].tag.clone()
                else {
                    unreachable!()
                };
                f.lines[i] = Line::new(
                    twin,
                    at,
                    Tag::Vuln {
                        vid: *vid,
                        introduced: at,
                        traced_to: planted,
                        fix,
                    },
                );
            } else {
                if template.is_some() && model_contains(model, &text) {
                    return Err(invalid(
                        at,
                        "template line already exists in the repository",
                    ));
                }
                let f = model.function_mut(function).expect("checked");
                let mut i = insertion_point(f, &mut namer.rng);
                if let Some(g) = guard {
                    for text in g {
                        f.lines
                            .insert(i, Line::new(text, at, Tag::Guard { vid: *vid }));
                        i += 1;
                    }
                }
                f.lines.insert(
                    i,
                    Line::new(
                        text,
                        at,
                        Tag::Vuln {
                            vid: *vid,
                            introduced: at,
                            traced_to: at,
                            fix,
                        },
                    ),
                );
            }
            book.introduced.insert(*vid);
            format!("Read more fields in {function}")
        }
        Event::RemoveGuard { vid } => {
            live_vid(book, *vid)?;
            let mut removed = 0;
            let mut owner = String::new();
            for f in model
                .files
                .values_mut()
                .flat_map(|f| f.functions.iter_mut())
            {
                let before = f.lines.len();
                f.lines.retain(|l| l.tag != Tag::Guard { vid: *vid });
                if f.lines.len() != before {
                    removed += before - f.lines.len();
                    owner = f.name.clone();
                }
            }
            if removed == 0 {
                return Err(invalid(at, format!("vulnerability {vid} has no guard")));
            }
            book.guard_removed_at.insert(*vid, at);
            format!("Simplify size handling in {owner}")
        }
        Event::FixVuln { vid } => {
            live_vid(book, *vid)?;
            if !book.introduced.contains(vid) {
                return Err(invalid(
                    at,
                    format!("FixVuln {vid} without a prior IntroduceVuln"),
                ));
            }
            let loc = model
                .locate_vuln(*vid)
                .ok_or_else(|| invalid(at, format!("vulnerability {vid} has no lines left")))?;
            let f = model.function_mut(&loc.function).expect("located");
            let mut fixed = 0;
            for l in f.lines.iter_mut() {
                if let Tag::Vuln { vid: v, fix, .. } = &l.tag {
                    if v == vid {
                        let indent: String =
                            l.text.chars().take_while(|c| c.is_whitespace()).collect();
                        *l = Line::new(format!("{indent}{}", fix.trim_start()), at, Tag::Plain);
                        fixed += 1;
                    }
                }
            }
            if model_has_vid(model, *vid) {
                return Err(invalid(
                    at,
                    format!("vulnerability {vid} spans several functions"),
                ));
            }
            debug_assert!(fixed > 0);
            book.fixed_at.insert(*vid, at);
            format!("Fix out-of-bounds access in {}", loc.function)
        }
    })
}

fn model_has_vid(model: &Model, vid: usize) -> bool {
    model.locate_vuln(vid).is_some()
}

fn model_contains(model: &Model, text: &str) -> bool {
    model.contains_text(text)
}

struct Built {
    states: Vec<Model>,
    messages: Vec<String>,
    book: Book,
}

fn build_states(spec: &HistorySpec) -> Result<Built> {
    let mut namer = Namer::new(ChaCha8Rng::seed_from_u64(spec.seed));
    let mut model = Model::default();
    if !valid_path(&spec.initial_file) {
        return Err(Error::InvalidSpec(format!(
            "unusable initial file {:?}",
            spec.initial_file
        )));
    }
    let mut initial = File::new(&module_of(&spec.initial_file), 0);
    for i in 0..spec.n_functions {
        let params = namer.params();
        let n = namer.rng.gen_range(2..6);
        let body = namer.statements(n);
        initial
            .functions
            .push(Function::new(&format!("helper_{i}"), params, body, 0));
    }
    model.files.insert(spec.initial_file.clone(), initial);
    let mut states = vec![model.clone()];
    let mut messages = vec!["Initial import".to_string()];
    let mut book = Book::default();
    for (i, event) in spec.events.iter().enumerate() {
        let at = i + 1;
        messages.push(apply(&mut model, event, at, &mut namer, &mut book)?);
        if model == *states.last().expect("initial state") {
            return Err(invalid(at, "event leaves the tree unchanged"));
        }
        states.push(model.clone());
    }
    Ok(Built {
        states,
        messages,
        book,
    })
}

fn rendered(model: &Model) -> BTreeMap<String, Vec<u8>> {
    model
        .files
        .iter()
        .map(|(p, f)| (p.clone(), f.render().0.into_bytes()))
        .collect()
}

enum Node {
    Blob(Vec<u8>),
    Dir(BTreeMap<String, Node>),
}

fn insert_node(dir: &mut BTreeMap<String, Node>, parts: &[&str], bytes: Vec<u8>) {
    match parts {
        [leaf] => {
            dir.insert(leaf.to_string(), Node::Blob(bytes));
        }
        [head, rest @ ..] => {
            let child = dir
                .entry(head.to_string())
                .or_insert_with(|| Node::Dir(BTreeMap::new()));
            if let Node::Dir(d) = child {
                insert_node(d, rest, bytes);
            }
        }
        [] => {}
    }
}

fn write_dir(repo: &Repository, dir: &BTreeMap<String, Node>) -> Result<Oid> {
    let mut tb = repo.treebuilder(None)?;
    for (name, node) in dir {
        match node {
            Node::Blob(bytes) => {
                let oid = repo.blob(bytes)?;
                tb.insert(name, oid, 0o100644)?;
            }
            Node::Dir(d) => {
                let oid = write_dir(repo, d)?;
                tb.insert(name, oid, 0o040000)?;
            }
        }
    }
    Ok(tb.write()?)
}

fn write_tree(repo: &Repository, files: &BTreeMap<String, Vec<u8>>) -> Result<Oid> {
    let mut root = BTreeMap::new();
    for (path, bytes) in files {
        let parts: Vec<&str> = path.split('/').collect();
        insert_node(&mut root, &parts, bytes.clone());
    }
    write_dir(repo, &root)
}

fn ensure_empty(dir: &Path) -> Result<()> {
    if dir.exists() {
        if std::fs::read_dir(dir)?.next().is_some() {
            return Err(Error::DirectoryNotEmpty(dir.to_path_buf()));
        }
    } else {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn write_repo(dir: &Path, built: &Built) -> Result<Vec<String>> {
    let repo = Repository::init(dir)?;
    let mut hashes = Vec::with_capacity(built.states.len());
    let mut parent: Option<git2::Commit<'_>> = None;
    for (i, (state, message)) in built.states.iter().zip(&built.messages).enumerate() {
        let tree = repo.find_tree(write_tree(&repo, &rendered(state))?)?;
        let when = Time::new(BASE_DATE + i as i64 * COMMIT_SPACING, 0);
        let sig = Signature::new("Forge", "forge@example.invalid", &when)?;
        let parents: Vec<&git2::Commit<'_>> = parent.iter().collect();
        let oid = repo.commit(Some(BRANCH), &sig, &sig, message, &tree, &parents)?;
        hashes.push(oid.to_string());
        parent = Some(repo.find_commit(oid)?);
    }
    drop(parent);
    repo.set_head(BRANCH)?;
    repo.checkout_head(Some(git2::build::CheckoutBuilder::new().force()))?;
    Ok(hashes)
}

fn latent_at(loc: &model::Located, commit: &str, snapshot: &str) -> LatentTruth {
    LatentTruth {
        commit: commit.to_string(),
        snapshot_commit: snapshot.to_string(),
        path: loc.path.clone(),
        function: loc.function.clone(),
        line_nos: loc.line_nos.clone(),
    }
}

fn truth_of(
    spec: &HistorySpec,
    built: &Built,
    hashes: &[String],
    project: &str,
) -> Result<GroundTruth> {
    let commits = hashes
        .iter()
        .enumerate()
        .map(|(i, h)| ForgedCommit {
            hash: h.clone(),
            author_date: BASE_DATE + i as i64 * COMMIT_SPACING,
            message: built.messages[i].clone(),
            event: i.checked_sub(1).map(|e| spec.events[e].clone()),
        })
        .collect();
    let mut vulnerabilities = Vec::new();
    for (&vid, &fix) in &built.book.fixed_at {
        let original = built.states[fix - 1]
            .locate_vuln(vid)
            .expect("fix found vulnerable lines");
        let mut lines = Vec::new();
        let mut introduced = usize::MAX;
        let mut traced = usize::MAX;
        for (line, &line_no) in original.lines.iter().zip(&original.line_nos) {
            let Tag::Vuln {
                introduced: i,
                traced_to: t,
                ..
            } = line.tag
            else {
                unreachable!()
            };
            introduced = introduced.min(i);
            traced = traced.min(t);
            lines.push(LineTruth {
                line_no,
                content: line.text.clone(),
                introduced_by: hashes[i].clone(),
                traced_to: hashes[t].clone(),
                last_modified_by: hashes[line.last].clone(),
            });
        }
        let true_vic = built
            .book
            .guard_removed_at
            .get(&vid)
            .copied()
            .unwrap_or(introduced)
            .max(introduced);
        let trap_reason = if built.book.guard_removed_at.contains_key(&vid) {
            FpReason::ChangedCodeContext
        } else {
            FpReason::IncorrectLineMapping
        };
        let mut latents = Vec::new();
        let mut fps = Vec::new();
        for c in (traced + 1..fix).rev() {
            let Some(prev) = built.states[c - 1].locate_tracked(vid) else {
                break;
            };
            let cur = built.states[c]
                .locate_tracked(vid)
                .expect("tracked lines persist until the fix");
            if prev.body == cur.body {
                continue;
            }
            let l = latent_at(&prev, &hashes[c], &hashes[c - 1]);
            if c <= true_vic {
                fps.push(ExpectedFalsePositive {
                    latent: l,
                    reason: trap_reason,
                });
            } else {
                latents.push(l);
            }
        }
        vulnerabilities.push(PlantedVulnerability {
            vid,
            vic_hash: hashes[true_vic].clone(),
            tracer_vic_hash: hashes[traced].clone(),
            vfc_hash: hashes[fix].clone(),
            path: original.path.clone(),
            function: original.function.clone(),
            start_line: original.start_line,
            lines,
            latents,
            expected_false_positives: fps,
        });
    }
    Ok(GroundTruth {
        name: spec.name.clone(),
        seed: spec.seed,
        project: project.to_string(),
        head: hashes.last().expect("initial commit").clone(),
        commits,
        vulnerabilities,
    })
}

fn mismatch(what: impl std::fmt::Display) -> Error {
    Error::InvalidSpec(format!("replay mismatch: {what}"))
}

/// Check a generated repository against the spec it was generated from:
/// every commit's tree equals the model render, extracted function spans
/// equal the model's, and the ground truth recomputed from the replayed
/// model equals `truth`.
pub fn replay_validate(
    repo_dir: impl AsRef<Path>,
    spec: &HistorySpec,
    truth: &GroundTruth,
) -> Result<()> {
    let built = build_states(spec)?;
    let handle = RepoHandle::open(repo_dir.as_ref())?;
    let mut chain = Vec::new();
    let mut cursor = Some(handle.head()?);
    while let Some(c) = cursor {
        cursor = handle.first_parent(&c)?;
        chain.push(c);
    }
    chain.reverse();
    if chain.len() != built.states.len() {
        return Err(mismatch(format!(
            "{} commits for {} states",
            chain.len(),
            built.states.len()
        )));
    }
    let repo = Repository::open(repo_dir.as_ref())?;
    for (i, (commit, state)) in chain.iter().zip(&built.states).enumerate() {
        if commit.author_date != BASE_DATE + i as i64 * COMMIT_SPACING {
            return Err(mismatch(format!("author date of commit {i}")));
        }
        let tree = repo.find_commit(Oid::from_str(&commit.hash)?)?.tree()?;
        let mut n_files = 0;
        tree.walk(git2::TreeWalkMode::PreOrder, |_, e| {
            if e.kind() == Some(git2::ObjectType::Blob) {
                n_files += 1;
            }
            git2::TreeWalkResult::Ok
        })?;
        if n_files != state.files.len() {
            return Err(mismatch(format!("file count at commit {i}")));
        }
        for (path, file) in &state.files {
            let (text, spans) = file.render();
            if handle.file_bytes_at(commit, path)? != text.as_bytes() {
                return Err(mismatch(format!("{path} at commit {i}")));
            }
            let found: Vec<(String, usize, usize)> = extract_functions(&text)
                .into_iter()
                .map(|f| (f.name, f.start_line, f.end_line))
                .collect();
            if found != spans {
                return Err(mismatch(format!("function spans of {path} at commit {i}")));
            }
        }
    }
    let hashes: Vec<String> = chain.iter().map(|c| c.hash.clone()).collect();
    let expected = truth_of(spec, &built, &hashes, &truth.project)?;
    if expected != *truth {
        return Err(mismatch("ground truth differs from the replayed model"));
    }
    for v in &truth.vulnerabilities {
        let vfc = handle.resolve(&v.vfc_hash)?;
        let parent = handle
            .first_parent(&vfc)?
            .ok_or_else(|| mismatch("root fix"))?;
        for l in &v.lines {
            if handle.line_at(&parent, &v.path, l.line_no)? != l.content {
                return Err(mismatch(format!(
                    "vulnerable line {} of {}",
                    l.line_no, v.path
                )));
            }
        }
    }
    Ok(())
}

/// Write the repository, `ground_truth.json` and `vfcs.csv` into `out_dir`,
/// which must be empty or absent.
pub fn generate(spec: &HistorySpec, out_dir: impl AsRef<Path>) -> Result<(PathBuf, GroundTruth)> {
    let out_dir = out_dir.as_ref();
    ensure_empty(out_dir)?;
    let built = build_states(spec)?;
    let repo_dir = out_dir.join("repo");
    let hashes = write_repo(&repo_dir, &built)?;
    let project = if spec.name.is_empty() {
        "synthetic".to_string()
    } else {
        spec.name.clone()
    };
    let truth = truth_of(spec, &built, &hashes, &project)?;
    replay_validate(&repo_dir, spec, &truth)?;
    truth.save(out_dir.join("ground_truth.json"))?;
    std::fs::write(out_dir.join("vfcs.csv"), truth.vfcs_csv("repo"))?;
    Ok((repo_dir, truth))
}

/// Model render of every file at every commit of `spec`, without touching
/// the filesystem.
pub fn render_history(spec: &HistorySpec) -> Result<Vec<BTreeMap<String, String>>> {
    Ok(build_states(spec)?
        .states
        .iter()
        .map(|m| {
            m.files
                .iter()
                .map(|(p, f)| (p.clone(), f.render().0))
                .collect()
        })
        .collect())
}

/// A single synthetic source file with `n` functions and their expected
/// `(name, start_line, end_line)` spans.
pub fn synthetic_file(seed: u64, n: usize) -> (String, Vec<(String, usize, usize)>) {
    let mut namer = Namer::new(ChaCha8Rng::seed_from_u64(seed));
    let mut file = File::new("generated", 0);
    for i in 0..n {
        let params = namer.params();
        let k = namer.rng.gen_range(1..8);
        let body = namer.statements(k);
        file.functions
            .push(Function::new(&format!("fn_{i}"), params, body, 0));
    }
    file.render()
}
