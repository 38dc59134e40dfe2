mod common;

use std::collections::BTreeSet;

use latent_sv::forge::{self, presets::PRESETS, Event, HistorySpec};
use latent_sv::repo::{apply_hunks, RepoHandle};
use latent_sv::Error;

fn spec(events: Vec<Event>) -> HistorySpec {
    HistorySpec {
        name: "repo-test".into(),
        seed: 11,
        n_functions: 1,
        initial_file: "src/util.c".into(),
        events,
    }
}

fn add(path: &str, name: &str) -> Event {
    Event::AddFunction {
        path: path.into(),
        name: name.into(),
        statements: 5,
    }
}

fn edit(name: &str) -> Event {
    Event::EditLine {
        function: name.into(),
    }
}

#[test]
fn head_matches_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let (repo, truth) = common::forge_preset("clean-chain", 1, dir.path());
    assert_eq!(repo.head().unwrap().hash, truth.head);
    let dates: Vec<i64> = truth.commits.iter().map(|c| c.author_date).collect();
    assert!(dates.windows(2).all(|w| w[1] - w[0] == 3600));
}

#[test]
fn one_line_edit_is_one_hunk() {
    let dir = tempfile::tempdir().unwrap();
    let (repo_dir, truth) =
        forge::generate(&spec(vec![add("src/a.c", "f"), edit("f")]), dir.path()).unwrap();
    let repo = RepoHandle::open(repo_dir).unwrap();
    let c = repo.resolve(&truth.head).unwrap();
    let diff = repo.diff_commit(&c).unwrap();
    assert_eq!(diff.len(), 1);
    assert_eq!(diff[0].hunks.len(), 1);
    let h = &diff[0].hunks[0];
    assert_eq!(h.deleted().count(), 1);
    assert_eq!(h.added().count(), 1);
}

#[test]
fn hunks_round_trip_and_file_diffs_are_well_formed() {
    for name in PRESETS {
        for seed in 0..3 {
            let dir = tempfile::tempdir().unwrap();
            let s = forge::preset(name, seed).unwrap();
            let rendered = forge::render_history(&s).unwrap();
            let (repo_dir, truth) = forge::generate(&s, dir.path()).unwrap();
            let repo = RepoHandle::open(repo_dir).unwrap();
            for (i, fc) in truth.commits.iter().enumerate() {
                let c = repo.resolve(&fc.hash).unwrap();
                let parent = repo.first_parent(&c).unwrap();
                for d in repo.diff_commit(&c).unwrap() {
                    match (&d.old_path, &d.new_path) {
                        (Some(o), Some(n)) => assert_eq!(d.rename, o != n),
                        (None, Some(_)) | (Some(_), None) => assert!(!d.rename),
                        (None, None) => panic!("diff without paths"),
                    }
                    let old = match (&d.old_path, &parent) {
                        (Some(p), Some(par)) => repo.file_at(par, p).unwrap(),
                        _ => String::new(),
                    };
                    let new = match &d.new_path {
                        Some(p) => repo.file_at(&c, p).unwrap(),
                        None => String::new(),
                    };
                    if d.rename && old == new {
                        assert!(d.hunks.is_empty());
                    }
                    assert_eq!(apply_hunks(&old, &d.hunks), new, "{name}/{seed} commit {i}");
                }
                for (path, text) in &rendered[i] {
                    assert_eq!(&repo.file_at(&c, path).unwrap(), text);
                }
            }
        }
    }
}

#[test]
fn rename_detected_as_pure_rename() {
    let dir = tempfile::tempdir().unwrap();
    let s = spec(vec![
        add("src/a.c", "f"),
        Event::RenameFile {
            from: "src/a.c".into(),
            to: "src/b.c".into(),
        },
    ]);
    let (repo_dir, truth) = forge::generate(&s, dir.path()).unwrap();
    let repo = RepoHandle::open(repo_dir).unwrap();
    let diff = repo
        .diff_commit(&repo.resolve(&truth.head).unwrap())
        .unwrap();
    assert_eq!(diff.len(), 1);
    assert!(diff[0].rename);
    assert_eq!(diff[0].old_path.as_deref(), Some("src/a.c"));
    assert_eq!(diff[0].new_path.as_deref(), Some("src/b.c"));
    assert!(diff[0].hunks.is_empty());
}

#[test]
fn blame_finds_the_middle_commit() {
    let dir = tempfile::tempdir().unwrap();
    let s = spec(vec![
        add("src/a.c", "f"),
        Event::IntroduceVuln {
            vid: 0,
            function: "f".into(),
            template: None,
            guarded: false,
        },
        edit("helper_0"),
        Event::FixVuln { vid: 0 },
    ]);
    let (repo_dir, truth) = forge::generate(&s, dir.path()).unwrap();
    let repo = RepoHandle::open(repo_dir).unwrap();
    let v = &truth.vulnerabilities[0];
    let parent = repo
        .first_parent(&repo.resolve(&v.vfc_hash).unwrap())
        .unwrap()
        .unwrap();
    let hit = repo
        .blame_line(&parent, &v.path, v.lines[0].line_no)
        .unwrap();
    assert_eq!(hit.commit.hash, truth.commits[2].hash);
    assert!(repo.is_ancestor(&hit.commit, &parent).unwrap());
    assert_eq!(
        repo.line_at(&hit.commit, &hit.path, hit.line_no).unwrap(),
        v.lines[0].content
    );
    assert!(matches!(
        repo.blame_line(&parent, &v.path, 10_000),
        Err(Error::LineOutOfRange { .. })
    ));
}

#[test]
fn blame_follows_a_rename() {
    let dir = tempfile::tempdir().unwrap();
    let (repo, truth) = common::forge_preset("rename-file", 2, dir.path());
    let v = &truth.vulnerabilities[0];
    let parent = repo
        .first_parent(&repo.resolve(&v.vfc_hash).unwrap())
        .unwrap()
        .unwrap();
    let hit = repo
        .blame_line(&parent, &v.path, v.lines[0].line_no)
        .unwrap();
    assert_eq!(hit.commit.hash, v.lines[0].last_modified_by);
    assert_ne!(hit.path, v.path);
}

#[test]
fn touching_commits_in_date_order() {
    let dir = tempfile::tempdir().unwrap();
    let s = spec(vec![
        add("src/a.c", "f"),
        add("src/b.c", "g"),
        edit("f"),
        edit("g"),
        edit("f"),
        edit("g"),
        edit("g"),
    ]);
    let (repo_dir, truth) = forge::generate(&s, dir.path()).unwrap();
    let repo = RepoHandle::open(repo_dir).unwrap();
    let from = repo.resolve(&truth.commits[2].hash).unwrap();
    let to = repo.resolve(&truth.commits[7].hash).unwrap();
    let paths = BTreeSet::from(["src/a.c".to_string()]);
    let got: Vec<String> = repo
        .commits_touching(&from, &to, &paths)
        .unwrap()
        .into_iter()
        .map(|c| c.hash)
        .collect();
    assert_eq!(
        got,
        vec![truth.commits[3].hash.clone(), truth.commits[5].hash.clone()]
    );
    assert!(repo
        .commits_touching(&from, &from, &paths)
        .unwrap()
        .is_empty());
    assert!(matches!(
        repo.commits_touching(&to, &from, &paths),
        Err(Error::NotAncestor { .. })
    ));
}

#[test]
fn lookup_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (repo, truth) = common::forge_preset("add-only", 0, dir.path());
    assert!(matches!(
        repo.resolve("deadbeef"),
        Err(Error::UnknownCommit(_))
    ));
    let head = repo.resolve(&truth.head).unwrap();
    assert!(matches!(
        repo.file_at(&head, "no/such.c"),
        Err(Error::PathMissingAtCommit { .. })
    ));
    assert!(!repo.path_exists(&head, "no/such.c").unwrap());
}
