//! Per-round train/validation/test assembly.
//!
//! Originals are shuffled and sliced 80:10:10 per round. Latent candidates
//! are attached to the training split only, and only for origins that landed
//! in it; any training entry whose normalized body also appears in
//! validation or test is then purged. Nothing is resampled or rebalanced.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::extract::{functions_at, norm_hash};
use crate::filter::{filter_cr, filter_lic, filter_st, Centroids, Embedder, NonVulnScorer};
use crate::mine::{LatentCandidate, OverlapReport};
use crate::repo::{RepoHandle, HISTORY_MODE};
use crate::surrogate::TokenModel;
use crate::trace::{LineTrace, VulnRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Vulnerable,
    Nonvulnerable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Original,
    Latent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledFunction {
    pub id: String,
    pub body: String,
    pub label: Label,
    /// 1-based, relative to the body.
    #[serde(default)]
    pub vuln_line_nos: Vec<usize>,
    pub provenance: Provenance,
    #[serde(default)]
    pub origin_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub project: Option<String>,
}

impl LabeledFunction {
    pub fn is_vulnerable(&self) -> bool {
        self.label == Label::Vulnerable
    }

    pub fn from_record(record: &VulnRecord) -> LabeledFunction {
        let start = record.function.start_line;
        LabeledFunction {
            id: record.id.clone(),
            body: record.function.body.clone(),
            label: Label::Vulnerable,
            vuln_line_nos: record
                .vuln_lines
                .iter()
                .map(|l| l.line_no - start + 1)
                .collect(),
            provenance: Provenance::Original,
            origin_id: None,
            project: Some(record.function.project.clone()),
        }
    }

    pub fn from_candidate(c: &LatentCandidate) -> LabeledFunction {
        LabeledFunction {
            id: c.id.clone(),
            body: c.snapshot.body.clone(),
            label: Label::Vulnerable,
            vuln_line_nos: c.relative_vuln_lines(),
            provenance: Provenance::Latent,
            origin_id: Some(c.origin.clone()),
            project: Some(c.snapshot.project.clone()),
        }
    }
}

/// Originals from fixing commits: each record's function is vulnerable, and
/// every other function of the same pre-fix files is non-vulnerable.
pub fn originals_from_records(
    repo: &RepoHandle,
    records: &[VulnRecord],
) -> Result<Vec<LabeledFunction>> {
    let mut out: Vec<LabeledFunction> = records.iter().map(LabeledFunction::from_record).collect();
    let mut files: BTreeMap<(String, String), BTreeSet<usize>> = BTreeMap::new();
    for r in records {
        files
            .entry((r.function.commit.clone(), r.function.path.clone()))
            .or_default()
            .insert(r.function.start_line);
    }
    for ((commit, path), vulnerable_starts) in files {
        let commit = repo.resolve(&commit)?;
        for f in functions_at(repo, &commit, &path)? {
            if vulnerable_starts.contains(&f.start_line) {
                continue;
            }
            out.push(LabeledFunction {
                id: format!("{}:{}:{}:{}", commit.short(), f.path, f.name, f.start_line),
                body: f.body,
                label: Label::Nonvulnerable,
                vuln_line_nos: Vec::new(),
                provenance: Provenance::Original,
                origin_id: None,
                project: Some(f.project),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    #[default]
    None,
    Lic,
    St,
    Cr,
}

impl std::str::FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(NoiseMode::None),
            "lic" => Ok(NoiseMode::Lic),
            "st" => Ok(NoiseMode::St),
            "cr" => Ok(NoiseMode::Cr),
            other => Err(Error::InvalidSpec(format!("unknown noise mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitUnit {
    #[default]
    Function,
    Project,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundSpec {
    pub round_index: usize,
    pub seed: u64,
    pub ratios: [f64; 3],
    pub use_latent: bool,
    pub noise_mode: NoiseMode,
    #[serde(default)]
    pub split_unit: SplitUnit,
}

pub const DEFAULT_ROUNDS: usize = 10;

impl RoundSpec {
    pub fn new(base_seed: u64, round_index: usize) -> RoundSpec {
        RoundSpec {
            round_index,
            seed: base_seed + round_index as u64,
            ratios: [0.8, 0.1, 0.1],
            use_latent: false,
            noise_mode: NoiseMode::None,
            split_unit: SplitUnit::Function,
        }
    }

    pub fn with_latent(mut self, noise_mode: NoiseMode) -> RoundSpec {
        self.use_latent = true;
        self.noise_mode = noise_mode;
        self
    }

    /// One spec per round, seeds `base_seed..base_seed + n`.
    pub fn rounds(template: RoundSpec, base_seed: u64, n: usize) -> Vec<RoundSpec> {
        (0..n)
            .map(|r| RoundSpec {
                round_index: r,
                seed: base_seed + r as u64,
                ..template
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.ratios.iter().sum();
        if self.ratios.iter().any(|r| !(0.0..=1.0).contains(r)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!(
                "split ratios must be non-negative and sum to 1, got {:?}",
                self.ratios
            )));
        }
        if self.noise_mode != NoiseMode::None && !self.use_latent {
            return Err(Error::InvalidSpec(
                "a noise mode only applies when latents are attached".into(),
            ));
        }
        Ok(())
    }
}

fn slice_sizes(n: usize, ratios: [f64; 3]) -> (usize, usize) {
    let train = (n as f64 * ratios[0] + 1e-9).floor() as usize;
    let val = (n as f64 * ratios[1] + 1e-9).floor() as usize;
    (train.min(n), val.min(n - train.min(n)))
}

pub type Split = (
    Vec<LabeledFunction>,
    Vec<LabeledFunction>,
    Vec<LabeledFunction>,
);

/// Seeded shuffle, then contiguous slices of `floor(0.8 n)`, `floor(0.1 n)`, rest.
pub fn split(originals: &[LabeledFunction], spec: &RoundSpec) -> Result<Split> {
    spec.validate()?;
    if originals.iter().any(|f| f.provenance == Provenance::Latent) {
        return Err(Error::InvalidSpec(
            "split takes original functions only".into(),
        ));
    }
    let n = originals.len();
    if n < 10 {
        return Err(Error::TooFewSamples { got: n, min: 10 });
    }
    let (n_train, n_val) = slice_sizes(n, spec.ratios);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.split_unit {
        SplitUnit::Function => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let take = |r: &[usize]| r.iter().map(|&i| originals[i].clone()).collect::<Vec<_>>();
            Ok((
                take(&order[..n_train]),
                take(&order[n_train..n_train + n_val]),
                take(&order[n_train + n_val..]),
            ))
        }
        SplitUnit::Project => {
            let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, f) in originals.iter().enumerate() {
                groups
                    .entry(f.project.as_deref().unwrap_or(""))
                    .or_default()
                    .push(i);
            }
            let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
            groups.shuffle(&mut rng);
            let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
            let mut placed = 0;
            for g in groups {
                let dest = if placed < n_train {
                    &mut train
                } else if placed < n_train + n_val {
                    &mut val
                } else {
                    &mut test
                };
                placed += g.len();
                dest.extend(g.into_iter().map(|i| originals[i].clone()));
            }
            Ok((train, val, test))
        }
    }
}

/// Optional pieces the noise filters need. Missing scorers and embedders
/// default to a surrogate model fit on the original training split.
#[derive(Default, Clone, Copy)]
pub struct NoiseContext<'a> {
    pub traces: Option<&'a HashMap<String, Vec<LineTrace>>>,
    pub scorer: Option<&'a dyn NonVulnScorer>,
    pub embedder: Option<&'a dyn Embedder>,
    pub smoothing: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttachReport {
    /// Candidates whose origin is in the training split.
    pub eligible: usize,
    /// Survivors of the noise filter.
    pub after_filter: usize,
    /// Dropped as cosmetic duplicates of training entries or of each other.
    pub duplicates: usize,
    /// Non-vulnerable training originals replaced by an identical latent.
    pub relabeled: usize,
    pub added: usize,
}

/// Add the latent versions of training-split origins to the training split.
pub fn attach_latents(
    train: &[LabeledFunction],
    candidates: &[LatentCandidate],
    known_origins: &HashSet<String>,
    spec: &RoundSpec,
    ctx: NoiseContext<'_>,
) -> Result<(Vec<LabeledFunction>, AttachReport)> {
    spec.validate()?;
    let mut report = AttachReport::default();
    if !spec.use_latent {
        return Ok((train.to_vec(), report));
    }
    if let Some(c) = candidates
        .iter()
        .find(|c| !known_origins.contains(&c.origin))
    {
        return Err(Error::OriginNotFound(c.origin.clone()));
    }
    let in_train: HashSet<&str> = train
        .iter()
        .filter(|f| f.is_vulnerable() && f.provenance == Provenance::Original)
        .map(|f| f.id.as_str())
        .collect();
    let eligible: Vec<LatentCandidate> = candidates
        .iter()
        .filter(|c| in_train.contains(c.origin.as_str()))
        .cloned()
        .collect();
    report.eligible = eligible.len();

    let smoothing = ctx.smoothing.unwrap_or(1.0);
    let kept = match spec.noise_mode {
        NoiseMode::None => eligible,
        NoiseMode::Lic => {
            let traces = ctx
                .traces
                .ok_or_else(|| Error::MissingTrace("no traces supplied for LIC".into()))?;
            filter_lic(&eligible, traces)?
        }
        NoiseMode::St => match ctx.scorer {
            Some(s) => filter_st(&eligible, s)?,
            None => filter_st(&eligible, &TokenModel::fit(train, smoothing)?)?,
        },
        NoiseMode::Cr => {
            let fitted;
            let embedder: &dyn Embedder = match ctx.embedder {
                Some(e) => e,
                None => {
                    fitted = TokenModel::fit(train, smoothing)?;
                    &fitted
                }
            };
            let mut vuln = Vec::new();
            let mut non = Vec::new();
            for f in train
                .iter()
                .filter(|f| f.provenance == Provenance::Original)
            {
                let v = embedder.embed(&f.id, &f.body)?;
                if f.is_vulnerable() {
                    vuln.push(v);
                } else {
                    non.push(v);
                }
            }
            let centroids = Centroids::fit(&vuln, &non)?;
            filter_cr(&eligible, embedder, &centroids)?
        }
    };
    report.after_filter = kept.len();

    let mut hashes: HashMap<String, usize> = HashMap::new();
    let mut out: Vec<Option<LabeledFunction>> = Vec::with_capacity(train.len() + kept.len());
    for f in train {
        hashes
            .entry(norm_hash(f.body.as_bytes()))
            .or_insert(out.len());
        out.push(Some(f.clone()));
    }
    let mut ordered = kept;
    ordered.sort_by(|a, b| {
        a.interm_commit
            .date_key()
            .cmp(&b.interm_commit.date_key())
            .then_with(|| a.id.cmp(&b.id))
    });
    for c in &ordered {
        let h = if c.snapshot.norm_hash.is_empty() {
            norm_hash(c.snapshot.body.as_bytes())
        } else {
            c.snapshot.norm_hash.clone()
        };
        match hashes.get(&h) {
            Some(&at) => {
                let clash = out[at].as_ref().expect("slot filled");
                if !clash.is_vulnerable() && clash.provenance == Provenance::Original {
                    out[at] = None;
                    out.push(Some(LabeledFunction::from_candidate(c)));
                    hashes.insert(h, out.len() - 1);
                    report.relabeled += 1;
                    report.added += 1;
                } else {
                    report.duplicates += 1;
                }
            }
            None => {
                hashes.insert(h, out.len());
                out.push(Some(LabeledFunction::from_candidate(c)));
                report.added += 1;
            }
        }
    }
    Ok((out.into_iter().flatten().collect(), report))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PurgeReport {
    pub removed: usize,
    pub removed_ids: Vec<String>,
}

/// Remove training entries whose normalized body also occurs in val or test.
pub fn leakage_purge(
    train: &[LabeledFunction],
    val: &[LabeledFunction],
    test: &[LabeledFunction],
) -> (Vec<LabeledFunction>, PurgeReport) {
    let held_out: HashSet<String> = val
        .iter()
        .chain(test)
        .map(|f| norm_hash(f.body.as_bytes()))
        .collect();
    let mut report = PurgeReport::default();
    let kept = train
        .iter()
        .filter(|f| {
            let leak = held_out.contains(&norm_hash(f.body.as_bytes()));
            if leak {
                report.removed_ids.push(f.id.clone());
            }
            !leak
        })
        .cloned()
        .collect();
    report.removed = report.removed_ids.len();
    (kept, report)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_functions: usize,
    pub n_vulnerable: usize,
    pub n_nonvulnerable: usize,
    pub sv_ratio: f64,
    pub n_original_vulnerable: usize,
    pub n_latent: usize,
    /// SV ratio counting only original functions.
    pub sv_ratio_without_latents: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latent_raw: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latent_deduped: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap: Option<OverlapReport>,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn stats(dataset: &[LabeledFunction]) -> DatasetStats {
    let n_vulnerable = dataset.iter().filter(|f| f.is_vulnerable()).count();
    let n_latent = dataset
        .iter()
        .filter(|f| f.provenance == Provenance::Latent)
        .count();
    let n_original_vulnerable = dataset
        .iter()
        .filter(|f| f.is_vulnerable() && f.provenance == Provenance::Original)
        .count();
    let n = dataset.len();
    DatasetStats {
        n_functions: n,
        n_vulnerable,
        n_nonvulnerable: n - n_vulnerable,
        sv_ratio: ratio(n_vulnerable, n),
        n_original_vulnerable,
        n_latent,
        sv_ratio_without_latents: ratio(n_original_vulnerable, n - n_latent),
        ..DatasetStats::default()
    }
}

impl DatasetStats {
    pub fn with_mining(
        mut self,
        raw: usize,
        deduped: usize,
        overlap: Option<OverlapReport>,
    ) -> Self {
        self.latent_raw = Some(raw);
        self.latent_deduped = Some(deduped);
        self.overlap = overlap;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationSet {
    pub fraction: f64,
    pub functions: Vec<LabeledFunction>,
}

pub const ABLATION_FRACTIONS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// For each fraction: a seeded subset of the vulnerable originals, all of
/// their latents, and every non-vulnerable original.
pub fn ablation_series(
    originals: &[LabeledFunction],
    latents: &[LabeledFunction],
    fractions: &[f64],
    seed: u64,
) -> Result<Vec<AblationSet>> {
    if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
        return Err(Error::InvalidSpec(format!(
            "ablation fraction {f} outside (0, 1]"
        )));
    }
    let vulnerable: Vec<&LabeledFunction> =
        originals.iter().filter(|f| f.is_vulnerable()).collect();
    let mut out = Vec::with_capacity(fractions.len());
    for &fraction in fractions {
        let mut order: Vec<usize> = (0..vulnerable.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let k = (fraction * vulnerable.len() as f64).round() as usize;
        let chosen: HashSet<&str> = order[..k.min(order.len())]
            .iter()
            .map(|&i| vulnerable[i].id.as_str())
            .collect();
        let functions = originals
            .iter()
            .filter(|f| !f.is_vulnerable() || chosen.contains(f.id.as_str()))
            .chain(
                latents
                    .iter()
                    .filter(|l| l.origin_id.as_deref().is_some_and(|o| chosen.contains(o))),
            )
            .cloned()
            .collect();
        out.push(AblationSet {
            fraction,
            functions,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub train_vulnerable: usize,
    pub train_latent: usize,
    pub purged: usize,
    pub attach: AttachReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundManifest {
    pub spec: RoundSpec,
    pub base_seed: u64,
    pub history: String,
    pub counts: RoundCounts,
    /// SHA-256 over the train, val and test JSON Lines, in that order.
    pub digest: String,
    /// Unix seconds; the only field that varies between identical reruns.
    pub generated_at: u64,
}

#[derive(Debug, Clone)]
pub struct Round {
    pub spec: RoundSpec,
    pub train: Vec<LabeledFunction>,
    pub val: Vec<LabeledFunction>,
    pub test: Vec<LabeledFunction>,
    pub manifest: RoundManifest,
}

/// Split, attach latents, purge, and record a manifest for one round.
pub fn build_round(
    originals: &[LabeledFunction],
    candidates: &[LatentCandidate],
    spec: &RoundSpec,
    base_seed: u64,
    ctx: NoiseContext<'_>,
) -> Result<Round> {
    let (train, val, test) = split(originals, spec)?;
    let known: HashSet<String> = originals.iter().map(|f| f.id.clone()).collect();
    let (attached, attach) = attach_latents(&train, candidates, &known, spec, ctx)?;
    let (train, purge) = leakage_purge(&attached, &val, &test);
    let mut digest = Sha256::new();
    for part in [&train, &val, &test] {
        digest.update(crate::jsonl::to_string(part)?.as_bytes());
    }
    let counts = RoundCounts {
        train: train.len(),
        val: val.len(),
        test: test.len(),
        train_vulnerable: train.iter().filter(|f| f.is_vulnerable()).count(),
        train_latent: train
            .iter()
            .filter(|f| f.provenance == Provenance::Latent)
            .count(),
        purged: purge.removed,
        attach,
    };
    let generated_at = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(Round {
        spec: *spec,
        manifest: RoundManifest {
            spec: *spec,
            base_seed,
            history: HISTORY_MODE.to_string(),
            counts,
            digest: hex::encode(digest.finalize()),
            generated_at,
        },
        train,
        val,
        test,
    })
}

pub fn build_rounds(
    originals: &[LabeledFunction],
    candidates: &[LatentCandidate],
    template: RoundSpec,
    base_seed: u64,
    n_rounds: usize,
    ctx: NoiseContext<'_>,
) -> Result<Vec<Round>> {
    RoundSpec::rounds(template, base_seed, n_rounds)
        .iter()
        .map(|spec| build_round(originals, candidates, spec, base_seed, ctx))
        .collect()
}

/// Write `round_{r}/{train,val,test}.jsonl` and `round_{r}/manifest.json`.
pub fn write_round(out_dir: impl AsRef<Path>, round: &Round) -> Result<()> {
    let dir = out_dir
        .as_ref()
        .join(format!("round_{}", round.spec.round_index));
    std::fs::create_dir_all(&dir)?;
    crate::jsonl::write(dir.join("train.jsonl"), &round.train)?;
    crate::jsonl::write(dir.join("val.jsonl"), &round.val)?;
    crate::jsonl::write(dir.join("test.jsonl"), &round.test)?;
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_vec_pretty(&round.manifest)?,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn original(i: usize, vulnerable: bool) -> LabeledFunction {
        LabeledFunction {
            id: format!("f{i}"),
            body: format!("int f{i}(void) {{ return {i}; }}"),
            label: if vulnerable {
                Label::Vulnerable
            } else {
                Label::Nonvulnerable
            },
            vuln_line_nos: if vulnerable { vec![1] } else { vec![] },
            provenance: Provenance::Original,
            origin_id: None,
            project: Some(format!("p{}", i % 3)),
        }
    }

    #[test]
    fn ten_split_eight_one_one() {
        let fs: Vec<_> = (0..10).map(|i| original(i, i % 2 == 0)).collect();
        let spec = RoundSpec::new(7, 0);
        let (a, b, c) = split(&fs, &spec).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (8, 1, 1));
        let again = split(&fs, &spec).unwrap();
        assert_eq!((a, b, c), again);
        assert!(matches!(
            split(&fs[..9], &spec),
            Err(Error::TooFewSamples { got: 9, min: 10 })
        ));
    }

    #[test]
    fn floor_sizes_at_corpus_scale() {
        assert_eq!(slice_sizes(157_355, [0.8, 0.1, 0.1]), (125_884, 15_735));
    }

    #[test]
    fn project_split_keeps_projects_together() {
        let fs: Vec<_> = (0..30).map(|i| original(i, i % 2 == 0)).collect();
        let spec = RoundSpec {
            split_unit: SplitUnit::Project,
            ..RoundSpec::new(1, 0)
        };
        let (a, b, c) = split(&fs, &spec).unwrap();
        let projects =
            |s: &[LabeledFunction]| s.iter().map(|f| f.project.clone()).collect::<HashSet<_>>();
        assert!(projects(&a).is_disjoint(&projects(&b)));
        assert!(projects(&a).is_disjoint(&projects(&c)));
        assert_eq!(a.len() + b.len() + c.len(), 30);
    }

    #[test]
    fn purge_planted_duplicate() {
        let train = vec![original(1, false), original(2, true)];
        let mut dup = original(2, true);
        dup.id = "test-copy".into();
        dup.body = dup.body.replace(' ', "\n ");
        let (kept, report) = leakage_purge(&train, &[], &[dup]);
        assert_eq!(report.removed, 1);
        assert_eq!(kept, vec![original(1, false)]);
        let (kept, report) = leakage_purge(&train, &[], &[]);
        assert_eq!((kept.len(), report.removed), (2, 0));
    }

    #[test]
    fn stats_of_empty_and_small() {
        let s = stats(&[]);
        assert_eq!((s.n_functions, s.n_vulnerable, s.sv_ratio), (0, 0, 0.0));
        let s = stats(&[
            original(0, true),
            original(1, false),
            original(2, false),
            original(3, false),
        ]);
        assert_eq!((s.n_vulnerable, s.n_nonvulnerable), (1, 3));
        assert!((s.sv_ratio - 0.25).abs() < 1e-12);
    }

    #[test]
    fn rounds_have_consecutive_seeds() {
        let seeds: Vec<u64> = RoundSpec::rounds(RoundSpec::new(0, 0), 100, DEFAULT_ROUNDS)
            .iter()
            .map(|s| s.seed)
            .collect();
        assert_eq!(seeds, (100..110).collect::<Vec<_>>());
    }
}
