//! Append-only label journal with an in-memory view rebuilt from it.
//!
//! Every mutation is appended to `journal.jsonl` before it becomes visible.
//! Readers take the latest published state without locking; writers are
//! serialized on the journal file.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use arc_swap::ArcSwap;
use serde::{Deserialize, Serialize};

use crate::agreement::{cohen_kappa, noise_summary, Kappa, NoiseSummary};
use crate::error::{Result, TriageError};
use crate::model::{now, Reason, Resolution, Status, TriageItem, TriageLabel, Verdict};

pub const JOURNAL_FILE: &str = "journal.jsonl";
pub const SNAPSHOT_FILE: &str = "snapshot.json";
const SNAPSHOT_EVERY: usize = 50;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Entry {
    Item(Box<TriageItem>),
    Label(TriageLabel),
    Resolution(Resolution),
}

#[derive(Debug, Clone, Default)]
struct State {
    items: Vec<TriageItem>,
    index: HashMap<String, usize>,
    labels: HashMap<String, Vec<TriageLabel>>,
    label_ids: HashSet<String>,
    resolutions: HashMap<String, Resolution>,
    entries: usize,
}

impl State {
    fn status_of(&self, item_id: &str) -> Status {
        let labels = self.labels.get(item_id).map(Vec::as_slice).unwrap_or(&[]);
        match labels.len() {
            0 => Status::Unlabeled,
            1 => Status::LabeledOne,
            _ if self.resolutions.contains_key(item_id) => Status::Resolved,
            _ if labels.iter().all(|l| l.verdict == labels[0].verdict) => Status::LabeledBoth,
            _ => Status::Disagreement,
        }
    }

    fn apply(&mut self, entry: Entry) {
        self.entries += 1;
        match entry {
            Entry::Item(item) => {
                let mut item = *item;
                item.status = Status::Unlabeled;
                self.index.insert(item.item_id.clone(), self.items.len());
                self.items.push(item);
            }
            Entry::Label(label) => {
                if let Some(id) = &label.label_id {
                    self.label_ids.insert(id.clone());
                }
                let item_id = label.item_id.clone();
                self.labels.entry(item_id.clone()).or_default().push(label);
                self.refresh(&item_id);
            }
            Entry::Resolution(r) => {
                let item_id = r.item_id.clone();
                self.resolutions.insert(item_id.clone(), r);
                self.refresh(&item_id);
            }
        }
    }

    fn refresh(&mut self, item_id: &str) {
        let status = self.status_of(item_id);
        if let Some(&i) = self.index.get(item_id) {
            self.items[i].status = status;
        }
    }

    fn item(&self, item_id: &str) -> Result<&TriageItem> {
        self.index
            .get(item_id)
            .map(|&i| &self.items[i])
            .ok_or_else(|| TriageError::UnknownItem(item_id.to_string()))
    }

    fn labels_of(&self, item_id: &str) -> &[TriageLabel] {
        self.labels.get(item_id).map(Vec::as_slice).unwrap_or(&[])
    }

    fn labelers(&self) -> BTreeSet<String> {
        self.labels
            .values()
            .flatten()
            .map(|l| l.labeler_id.clone())
            .collect()
    }
}

/// An item with the labels its reader may see.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemView {
    #[serde(flatten)]
    pub item: TriageItem,
    pub labels: Vec<TriageLabel>,
    pub resolution: Option<Resolution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairKappa {
    pub a: String,
    pub b: String,
    #[serde(flatten)]
    pub kappa: Kappa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    pub labelers: Vec<String>,
    pub pairs: Vec<PairKappa>,
}

#[derive(Debug, Serialize)]
struct Snapshot<'a> {
    items: &'a [TriageItem],
    labels: BTreeMap<&'a str, &'a [TriageLabel]>,
    resolutions: BTreeMap<&'a str, &'a Resolution>,
}

pub struct Store {
    dir: Option<PathBuf>,
    state: ArcSwap<State>,
    writer: Mutex<Option<File>>,
}

impl Store {
    /// A store that keeps nothing on disk.
    pub fn in_memory(items: Vec<TriageItem>) -> Result<Store> {
        let store = Store {
            dir: None,
            state: ArcSwap::from_pointee(State::default()),
            writer: Mutex::new(None),
        };
        store.add_items(items)?;
        Ok(store)
    }

    /// Open the journal in `dir`, creating it with `items` if it does not exist.
    /// Existing journals are replayed and `items` is ignored.
    pub fn open_or_create(
        dir: impl AsRef<Path>,
        items: impl FnOnce() -> Result<Vec<TriageItem>>,
    ) -> Result<Store> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let path = dir.join(JOURNAL_FILE);
        let fresh = !path.exists();
        let mut state = State::default();
        if !fresh {
            let reader = BufReader::new(File::open(&path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry = serde_json::from_str(&line).map_err(|source| TriageError::Journal {
                    path: path.display().to_string(),
                    line: i + 1,
                    source,
                })?;
                state.apply(entry);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        let store = Store {
            dir: Some(dir.to_path_buf()),
            state: ArcSwap::from_pointee(state),
            writer: Mutex::new(Some(file)),
        };
        if fresh {
            store.add_items(items()?)?;
        }
        Ok(store)
    }

    fn add_items(&self, items: Vec<TriageItem>) -> Result<()> {
        if items.is_empty() {
            return Err(TriageError::EmptyInput("triage items"));
        }
        let mut writer = self.writer.lock().expect("journal writer poisoned");
        let mut next = State::clone(&self.state.load());
        for item in items {
            let entry = Entry::Item(Box::new(item));
            append(writer.as_mut(), &entry)?;
            next.apply(entry);
        }
        self.publish(next)?;
        Ok(())
    }

    fn commit(
        &self,
        entry: Entry,
        check: impl FnOnce(&State) -> Result<Option<Status>>,
    ) -> Result<Status> {
        let mut writer = self.writer.lock().expect("journal writer poisoned");
        let current = self.state.load_full();
        if let Some(status) = check(&current)? {
            return Ok(status);
        }
        let item_id = match &entry {
            Entry::Label(l) => l.item_id.clone(),
            Entry::Resolution(r) => r.item_id.clone(),
            Entry::Item(i) => i.item_id.clone(),
        };
        append(writer.as_mut(), &entry)?;
        let mut next = State::clone(&current);
        next.apply(entry);
        let status = next.status_of(&item_id);
        self.publish(next)?;
        Ok(status)
    }

    fn publish(&self, next: State) -> Result<()> {
        let snapshot_due =
            next.entries / SNAPSHOT_EVERY != self.state.load().entries / SNAPSHOT_EVERY;
        let next = Arc::new(next);
        self.state.store(next.clone());
        if snapshot_due {
            self.write_snapshot(&next)?;
        }
        Ok(())
    }

    fn write_snapshot(&self, state: &State) -> Result<()> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let snap = Snapshot {
            items: &state.items,
            labels: state
                .labels
                .iter()
                .map(|(k, v)| (k.as_str(), v.as_slice()))
                .collect(),
            resolutions: state
                .resolutions
                .iter()
                .map(|(k, v)| (k.as_str(), v))
                .collect(),
        };
        let tmp = dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        std::fs::write(&tmp, serde_json::to_vec_pretty(&snap)?)?;
        std::fs::rename(tmp, dir.join(SNAPSHOT_FILE))?;
        Ok(())
    }

    /// Write the current state to `snapshot.json` now.
    pub fn snapshot(&self) -> Result<()> {
        self.write_snapshot(&self.state.load())
    }

    pub fn submit_label(&self, mut label: TriageLabel) -> Result<Status> {
        if label.labeler_id.trim().is_empty() {
            return Err(TriageError::InvalidLabel("labeler_id is empty".into()));
        }
        if !label.is_consistent() {
            return Err(TriageError::InvalidLabel(
                "a reason other than n_a is required exactly for false positives".into(),
            ));
        }
        if label.timestamp == 0 {
            label.timestamp = now();
        }
        let probe = label.clone();
        self.commit(Entry::Label(label), move |s| {
            s.item(&probe.item_id)?;
            if probe
                .label_id
                .as_ref()
                .is_some_and(|id| s.label_ids.contains(id))
            {
                return Ok(Some(s.status_of(&probe.item_id)));
            }
            if s.labels_of(&probe.item_id)
                .iter()
                .any(|l| l.labeler_id == probe.labeler_id)
            {
                return Err(TriageError::DuplicateLabel {
                    item: probe.item_id.clone(),
                    labeler: probe.labeler_id.clone(),
                });
            }
            Ok(None)
        })
    }

    pub fn resolve(&self, mut resolution: Resolution) -> Result<Status> {
        if (resolution.reason != Reason::NotApplicable)
            != (resolution.verdict == Verdict::FalsePositive)
        {
            return Err(TriageError::InvalidLabel(
                "a reason other than n_a is required exactly for false positives".into(),
            ));
        }
        if resolution.timestamp == 0 {
            resolution.timestamp = now();
        }
        let item_id = resolution.item_id.clone();
        self.commit(Entry::Resolution(resolution), move |s| {
            s.item(&item_id)?;
            if s.status_of(&item_id) != Status::Disagreement {
                return Err(TriageError::NotInDisagreement(item_id.clone()));
            }
            Ok(None)
        })
    }

    pub fn items(&self) -> Vec<TriageItem> {
        self.state.load().items.clone()
    }

    /// Item as seen by `labeler`: other labelers' labels stay hidden until
    /// the reader has labeled it too.
    pub fn view(&self, item_id: &str, labeler: Option<&str>) -> Result<ItemView> {
        let s = self.state.load();
        let item = s.item(item_id)?.clone();
        let all = s.labels_of(item_id);
        let own_done = labeler.is_some_and(|me| all.iter().any(|l| l.labeler_id == me));
        let labels = all
            .iter()
            .filter(|l| own_done || (labeler.is_some() && Some(l.labeler_id.as_str()) == labeler))
            .cloned()
            .collect();
        let resolution = if own_done {
            s.resolutions.get(item_id).cloned()
        } else {
            None
        };
        Ok(ItemView {
            item,
            labels,
            resolution,
        })
    }

    /// First item, in sample order, that `labeler` has not labeled.
    pub fn next_for(&self, labeler: &str) -> Option<ItemView> {
        let s = self.state.load();
        let id = s
            .items
            .iter()
            .find(|i| {
                !s.labels_of(&i.item_id)
                    .iter()
                    .any(|l| l.labeler_id == labeler)
            })?
            .item_id
            .clone();
        self.view(&id, Some(labeler)).ok()
    }

    pub fn disagreements(&self) -> Vec<ItemView> {
        let s = self.state.load();
        s.items
            .iter()
            .filter(|i| i.status == Status::Disagreement)
            .map(|i| ItemView {
                item: i.clone(),
                labels: s.labels_of(&i.item_id).to_vec(),
                resolution: None,
            })
            .collect()
    }

    /// Verdicts of one labeler keyed by item.
    pub fn verdicts_of(&self, labeler: &str) -> BTreeMap<String, Verdict> {
        let s = self.state.load();
        s.labels
            .iter()
            .filter_map(|(item, ls)| {
                ls.iter()
                    .find(|l| l.labeler_id == labeler)
                    .map(|l| (item.clone(), l.verdict))
            })
            .collect()
    }

    /// Kappa for every pair of labelers.
    pub fn kappa(&self) -> Result<KappaReport> {
        let labelers: Vec<String> = self.state.load().labelers().into_iter().collect();
        if labelers.len() < 2 {
            return Err(TriageError::EmptyInput("two labelers"));
        }
        let mut pairs = Vec::new();
        for (i, a) in labelers.iter().enumerate() {
            for b in &labelers[i + 1..] {
                pairs.push(PairKappa {
                    a: a.clone(),
                    b: b.clone(),
                    kappa: cohen_kappa(&self.verdicts_of(a), &self.verdicts_of(b))?,
                });
            }
        }
        Ok(KappaReport { labelers, pairs })
    }

    /// Final verdict per item: the resolution, or the shared verdict when
    /// labelers agreed. The reason of an agreed false positive is the first
    /// labeler's.
    pub fn finals(&self) -> Result<Vec<(String, Verdict, Reason)>> {
        let s = self.state.load();
        let mut out = Vec::with_capacity(s.items.len());
        let mut open = 0;
        for item in &s.items {
            match item.status {
                Status::Resolved => {
                    let r = &s.resolutions[&item.item_id];
                    out.push((item.item_id.clone(), r.verdict, r.reason));
                }
                Status::LabeledBoth => {
                    let l = &s.labels_of(&item.item_id)[0];
                    out.push((item.item_id.clone(), l.verdict, l.reason));
                }
                _ => open += 1,
            }
        }
        if open > 0 {
            return Err(TriageError::UnresolvedItems(open));
        }
        Ok(out)
    }

    pub fn summary(&self) -> Result<NoiseSummary> {
        let finals: Vec<(Verdict, Reason)> =
            self.finals()?.into_iter().map(|(_, v, r)| (v, r)).collect();
        Ok(noise_summary(&finals))
    }
}

fn append(writer: Option<&mut File>, entry: &Entry) -> Result<()> {
    if let Some(f) = writer {
        let mut line = serde_json::to_vec(entry)?;
        line.push(b'\n');
        f.write_all(&line)?;
        f.flush()?;
    }
    Ok(())
}
