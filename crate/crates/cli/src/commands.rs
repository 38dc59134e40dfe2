use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context as _;
use latent_sv::dataset::{
    ablation_series, build_rounds, stats, write_round, LabeledFunction, NoiseContext, NoiseMode,
    ABLATION_FRACTIONS,
};
use latent_sv::eval::report::METRIC_NAMES;
use latent_sv::eval::{compare_rounds, evaluate, summarize, PredictionRecord};
use latent_sv::filter::{
    filter_cr, filter_lic, filter_st, Centroids, Embedder, ExternalProbabilities, ExternalVectors,
    NonVulnScorer,
};
use latent_sv::mine::LatentCandidate;
use latent_sv::pipeline::{
    extract_records, group_traces, mine_records, original_functions, read_vfc_csv, trace_records,
    MiningSummary, Repos,
};
use latent_sv::surrogate::TokenModel;
use latent_sv::trace::{LineTrace, VulnRecord};
use latent_sv::{forge, jsonl};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::PipelineConfig;
use crate::Validation;

pub const RECORDS: &str = "records.jsonl";
pub const ORIGINALS: &str = "originals.jsonl";
pub const REPOS: &str = "repos.json";
pub const TRACES: &str = "traces.jsonl";
pub const CANDIDATES: &str = "candidates.jsonl";
pub const MINING: &str = "mining.json";
pub const ROUNDS_DIR: &str = "rounds";

/// Resolved settings shared by every stage.
pub struct Ctx {
    pub cfg: PipelineConfig,
    pub out: PathBuf,
    pub seed: u64,
    pub jobs: usize,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// An earlier stage's artifact, or a validation error naming that stage.
    fn input(&self, name: &str, stage: &str) -> Result<PathBuf, Validation> {
        let p = self.path(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Validation(format!(
                "{} is missing; run `latent-sv {stage}` first",
                p.display()
            )))
        }
    }

    fn read<T: DeserializeOwned>(&self, name: &str, stage: &str) -> anyhow::Result<Vec<T>> {
        Ok(jsonl::read(self.input(name, stage)?)?)
    }

    fn repos(&self) -> anyhow::Result<Repos> {
        let p = self.input(REPOS, "extract")?;
        let paths: BTreeMap<String, PathBuf> = serde_json::from_slice(&std::fs::read(&p)?)
            .with_context(|| format!("reading {}", p.display()))?;
        Ok(Repos::from_paths(&paths)?)
    }

    fn grouped_traces(&self) -> anyhow::Result<HashMap<String, Vec<LineTrace>>> {
        let records: Vec<VulnRecord> = self.read(RECORDS, "extract")?;
        let traces: Vec<LineTrace> = self.read(TRACES, "trace")?;
        Ok(group_traces(&records, &traces))
    }

    fn write_lines<T: Serialize>(&self, name: &str, items: &[T]) -> anyhow::Result<PathBuf> {
        std::fs::create_dir_all(&self.out)?;
        let p = self.path(name);
        jsonl::write(&p, items)?;
        Ok(p)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> anyhow::Result<PathBuf> {
        std::fs::create_dir_all(&self.out)?;
        let p = self.path(name);
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        std::fs::write(&p, bytes)?;
        Ok(p)
    }
}

pub fn forge(ctx: &Ctx, preset: &str, dest: Option<PathBuf>) -> anyhow::Result<Value> {
    let spec = forge::preset(preset, ctx.seed)?;
    let dest = dest.unwrap_or_else(|| ctx.path("forge").join(preset));
    let (repo, truth) = forge::generate(&spec, &dest)?;
    Ok(json!({
        "repo": repo,
        "vfcs": dest.join("vfcs.csv"),
        "ground_truth": dest.join("ground_truth.json"),
        "commits": truth.commits.len(),
        "vulnerabilities": truth.vulnerabilities.len(),
    }))
}

pub fn extract(ctx: &Ctx, vfcs: Option<PathBuf>) -> anyhow::Result<Value> {
    let vfcs = vfcs
        .or_else(|| ctx.cfg.vfcs.clone())
        .ok_or_else(|| Validation("no VFC list: pass --vfcs or set `vfcs` in the config".into()))?;
    if !vfcs.is_file() {
        return Err(Validation(format!("VFC list {} does not exist", vfcs.display())).into());
    }
    let mut entries = read_vfc_csv(&vfcs)?;
    for e in &mut entries {
        if let Some(p) = ctx.cfg.repos.get(&e.project) {
            e.repo_path = p.clone();
        }
        if !e.repo_path.is_dir() {
            return Err(Validation(format!(
                "repository for `{}` at {} does not exist",
                e.project,
                e.repo_path.display()
            ))
            .into());
        }
        e.repo_path = std::fs::canonicalize(&e.repo_path)?;
    }
    let repos = Repos::open(&entries)?;
    let records = extract_records(&entries, &repos, ctx.jobs)?;
    let originals = original_functions(&records, &repos)?;
    ctx.write_lines(RECORDS, &records)?;
    ctx.write_lines(ORIGINALS, &originals)?;
    ctx.write_json(REPOS, &repos.paths())?;
    Ok(json!({
        "vfcs": entries.len(),
        "records": records.len(),
        "vulnerable_lines": records.iter().map(|r| r.vuln_lines.len()).sum::<usize>(),
        "originals": originals.len(),
        "originals_vulnerable": originals.iter().filter(|f| f.is_vulnerable()).count(),
    }))
}

pub fn trace(ctx: &Ctx) -> anyhow::Result<Value> {
    let records: Vec<VulnRecord> = ctx.read(RECORDS, "extract")?;
    let repos = ctx.repos()?;
    let traces = trace_records(&records, &repos, &ctx.cfg.trace, ctx.jobs)?;
    ctx.write_lines(TRACES, &traces)?;
    let vics: std::collections::BTreeSet<&str> =
        traces.iter().map(|t| t.vic.hash.as_str()).collect();
    Ok(json!({
        "lines": traces.len(),
        "hops": traces.iter().map(|t| t.hops.len()).sum::<usize>(),
        "distinct_vics": vics.len(),
    }))
}

pub fn mine(ctx: &Ctx) -> anyhow::Result<Value> {
    let records: Vec<VulnRecord> = ctx.read(RECORDS, "extract")?;
    let originals: Vec<LabeledFunction> = ctx.read(ORIGINALS, "extract")?;
    let traces: Vec<LineTrace> = ctx.read(TRACES, "trace")?;
    let repos = ctx.repos()?;
    let grouped = group_traces(&records, &traces);
    let (candidates, summary) = mine_records(
        &records,
        &grouped,
        &originals,
        &repos,
        &ctx.cfg.trace,
        ctx.jobs,
    )?;
    ctx.write_lines(CANDIDATES, &candidates)?;
    ctx.write_json(MINING, &summary)?;
    Ok(serde_json::to_value(summary)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FilterMode {
    Lic,
    St,
    Cr,
}

impl FilterMode {
    fn name(self) -> &'static str {
        match self {
            FilterMode::Lic => "lic",
            FilterMode::St => "st",
            FilterMode::Cr => "cr",
        }
    }
}

fn surrogate(ctx: &Ctx, originals: &[LabeledFunction]) -> anyhow::Result<TokenModel> {
    Ok(TokenModel::fit(originals, ctx.cfg.rounds.smoothing)?)
}

pub fn filter(
    ctx: &Ctx,
    mode: FilterMode,
    input: Option<PathBuf>,
    probs: Option<PathBuf>,
    vectors: Option<PathBuf>,
) -> anyhow::Result<Value> {
    let candidates: Vec<LatentCandidate> = match &input {
        Some(p) => jsonl::read(p)?,
        None => ctx.read(CANDIDATES, "mine")?,
    };
    let kept = match mode {
        FilterMode::Lic => filter_lic(&candidates, &ctx.grouped_traces()?)?,
        FilterMode::St => match probs {
            Some(p) => filter_st(&candidates, &ExternalProbabilities::load(p)?)?,
            None => filter_st(
                &candidates,
                &surrogate(ctx, &ctx.read(ORIGINALS, "extract")?)?,
            )?,
        },
        FilterMode::Cr => {
            let originals: Vec<LabeledFunction> = ctx.read(ORIGINALS, "extract")?;
            let external = vectors.map(ExternalVectors::load).transpose()?;
            let model;
            let embedder: &dyn Embedder = match &external {
                Some(v) => v,
                None => {
                    model = surrogate(ctx, &originals)?;
                    &model
                }
            };
            let embed = |vuln: bool| -> latent_sv::Result<Vec<_>> {
                originals
                    .iter()
                    .filter(|f| f.is_vulnerable() == vuln)
                    .map(|f| embedder.embed(&f.id, &f.body))
                    .collect()
            };
            let centroids = Centroids::fit(&embed(true)?, &embed(false)?)?;
            filter_cr(&candidates, embedder, &centroids)?
        }
    };
    let name = format!("candidates.{}.jsonl", mode.name());
    let path = ctx.write_lines(&name, &kept)?;
    Ok(json!({
        "mode": mode.name(),
        "input": candidates.len(),
        "kept": kept.len(),
        "removed": candidates.len() - kept.len(),
        "output": path,
    }))
}

pub struct BuildArgs {
    pub rounds: Option<usize>,
    pub latent: bool,
    pub noise: Option<NoiseMode>,
    pub candidates: Option<PathBuf>,
    pub probs: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
}

pub fn build(ctx: &Ctx, args: BuildArgs) -> anyhow::Result<Value> {
    let originals: Vec<LabeledFunction> = ctx.read(ORIGINALS, "extract")?;
    let mut template = ctx.cfg.rounds.template();
    if args.latent || args.noise.is_some() {
        template.use_latent = true;
    }
    if let Some(n) = args.noise {
        template.noise_mode = n;
    }
    template.validate().map_err(|e| Validation(e.to_string()))?;
    let n_rounds = args.rounds.unwrap_or(ctx.cfg.rounds.rounds);
    if n_rounds == 0 {
        return Err(Validation("--rounds must be at least 1".into()).into());
    }
    let candidates: Vec<LatentCandidate> = match (&args.candidates, template.use_latent) {
        (_, false) => Vec::new(),
        (Some(p), true) => jsonl::read(p)?,
        (None, true) => ctx.read(CANDIDATES, "mine")?,
    };
    let traces = if template.noise_mode == NoiseMode::Lic {
        Some(ctx.grouped_traces()?)
    } else {
        None
    };
    let probs = args.probs.map(ExternalProbabilities::load).transpose()?;
    let vectors = args.vectors.map(ExternalVectors::load).transpose()?;
    let noise = NoiseContext {
        traces: traces.as_ref(),
        scorer: probs.as_ref().map(|p| p as &dyn NonVulnScorer),
        embedder: vectors.as_ref().map(|v| v as &dyn Embedder),
        smoothing: Some(ctx.cfg.rounds.smoothing),
    };
    let rounds = build_rounds(&originals, &candidates, template, ctx.seed, n_rounds, noise)?;
    let dir = ctx.path(ROUNDS_DIR);
    let mut manifests = Vec::new();
    for r in &rounds {
        write_round(&dir, r)?;
        manifests.push(json!({
            "round": r.spec.round_index,
            "seed": r.spec.seed,
            "counts": r.manifest.counts,
            "digest": r.manifest.digest,
        }));
    }
    Ok(json!({ "dir": dir, "rounds": manifests }))
}

/// Round directories under `dir`, in round order.
fn round_dirs(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Validation(format!(
            "{} is missing; run `latent-sv build` first",
            dir.display()
        ))
        .into());
    }
    let mut found: Vec<(usize, PathBuf)> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            let idx = name.strip_prefix("round_")?.parse().ok()?;
            Some((idx, e.path()))
        })
        .collect();
    found.sort();
    if found.is_empty() {
        return Err(Validation(format!("no round_* directories in {}", dir.display())).into());
    }
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

/// Fit the token surrogate on each round's train split and score its test split.
pub fn predict(ctx: &Ctx, rounds_dir: Option<PathBuf>) -> anyhow::Result<Value> {
    let dir = rounds_dir.unwrap_or_else(|| ctx.path(ROUNDS_DIR));
    let mut out = Vec::new();
    for round in round_dirs(&dir)? {
        let train: Vec<LabeledFunction> = jsonl::read(round.join("train.jsonl"))?;
        let test: Vec<LabeledFunction> = jsonl::read(round.join("test.jsonl"))?;
        let model = TokenModel::fit(&train, ctx.cfg.rounds.smoothing)?;
        let preds: Vec<PredictionRecord> = test
            .iter()
            .map(|f| PredictionRecord {
                id: f.id.clone(),
                p_vulnerable: model.predict_proba(&f.body),
                line_scores: Some(model.line_scores(&f.body)),
                hard_label: None,
            })
            .collect();
        let p = round.join("preds.jsonl");
        jsonl::write(&p, &preds)?;
        out.push(p);
    }
    Ok(json!({ "predictions": out }))
}

pub struct EvalArgs {
    pub preds: Vec<PathBuf>,
    pub test: Vec<PathBuf>,
    pub baseline: Vec<PathBuf>,
    pub rounds_dir: Option<PathBuf>,
    pub baseline_dir: Option<PathBuf>,
    pub threshold: f64,
}

pub fn eval(ctx: &Ctx, mut args: EvalArgs) -> anyhow::Result<Value> {
    if let Some(dir) = &args.rounds_dir {
        for r in round_dirs(dir)? {
            args.preds.push(r.join("preds.jsonl"));
            args.test.push(r.join("test.jsonl"));
        }
    }
    if let Some(dir) = &args.baseline_dir {
        for r in round_dirs(dir)? {
            args.baseline.push(r.join("preds.jsonl"));
        }
    }
    if args.preds.is_empty() {
        return Err(
            Validation("no predictions: pass --preds FILE or --rounds-dir DIR".into()).into(),
        );
    }
    if args.test.len() != 1 && args.test.len() != args.preds.len() {
        return Err(Validation(format!(
            "{} prediction file(s) but {} test file(s)",
            args.preds.len(),
            args.test.len()
        ))
        .into());
    }
    if !args.baseline.is_empty() && args.baseline.len() != args.preds.len() {
        return Err(Validation(format!(
            "{} prediction file(s) but {} baseline file(s)",
            args.preds.len(),
            args.baseline.len()
        ))
        .into());
    }
    if !(0.0..=1.0).contains(&args.threshold) {
        return Err(Validation("--threshold must lie in [0, 1]".into()).into());
    }
    let score = |files: &[PathBuf]| -> anyhow::Result<Vec<_>> {
        files
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let t = &args.test[if args.test.len() == 1 { 0 } else { i }];
                let preds: Vec<PredictionRecord> = jsonl::read(p)?;
                let functions: Vec<LabeledFunction> = jsonl::read(t)?;
                Ok(evaluate(&preds, &functions, args.threshold)?)
            })
            .collect()
    };
    let reports = score(&args.preds)?;
    let mut out = json!({ "rounds": reports });
    if reports.len() > 1 {
        out["summary"] = serde_json::to_value(summarize(&reports)?)?;
    }
    if !args.baseline.is_empty() {
        let base = score(&args.baseline)?;
        out["baseline"] = json!({ "rounds": base });
        if base.len() > 1 {
            out["baseline"]["summary"] = serde_json::to_value(summarize(&base)?)?;
        }
        let mut comparisons = serde_json::Map::new();
        for metric in METRIC_NAMES {
            let v = match compare_rounds(metric, &reports, &base) {
                Ok(c) => serde_json::to_value(c)?,
                Err(
                    e @ (latent_sv::Error::AllZeroDifferences | latent_sv::Error::EmptyInput(_)),
                ) => {
                    json!({ "undefined": e.to_string() })
                }
                Err(e) => return Err(e.into()),
            };
            comparisons.insert(metric.to_string(), v);
        }
        out["comparisons"] = Value::Object(comparisons);
    }
    ctx.write_json("eval.json", &out)?;
    Ok(out)
}

pub fn stats_cmd(ctx: &Ctx, dataset: Option<PathBuf>) -> anyhow::Result<Value> {
    let (functions, default): (Vec<LabeledFunction>, bool) = match &dataset {
        Some(p) => (jsonl::read(p)?, false),
        None => (ctx.read(ORIGINALS, "extract")?, true),
    };
    let mut s = stats(&functions);
    let mining = ctx.path(MINING);
    if default && mining.is_file() {
        let m: MiningSummary = serde_json::from_slice(&std::fs::read(&mining)?)?;
        s = s.with_mining(m.raw, m.deduped, m.overlap);
    }
    ctx.write_json("stats.json", &s)?;
    Ok(serde_json::to_value(s)?)
}

pub fn ablate(ctx: &Ctx, fractions: Vec<f64>) -> anyhow::Result<Value> {
    let fractions = if fractions.is_empty() {
        ABLATION_FRACTIONS.to_vec()
    } else {
        fractions
    };
    let originals: Vec<LabeledFunction> = ctx.read(ORIGINALS, "extract")?;
    let candidates: Vec<LatentCandidate> = ctx.read(CANDIDATES, "mine")?;
    let latents: Vec<LabeledFunction> = candidates
        .iter()
        .map(LabeledFunction::from_candidate)
        .collect();
    let series =
        ablation_series(&originals, &latents, &fractions, ctx.seed).map_err(|e| match e {
            latent_sv::Error::InvalidSpec(m) => anyhow::Error::from(Validation(m)),
            e => e.into(),
        })?;
    let dir = ctx.path("ablation");
    std::fs::create_dir_all(&dir)?;
    let mut sets = Vec::new();
    for s in &series {
        let p = dir.join(format!("fraction_{:.2}.jsonl", s.fraction));
        jsonl::write(&p, &s.functions)?;
        sets.push(json!({
            "fraction": s.fraction,
            "path": p,
            "stats": stats(&s.functions),
        }));
    }
    Ok(json!({ "sets": sets }))
}

pub struct ServeArgs {
    pub host: String,
    pub port: u16,
    pub n: usize,
    pub candidates: Option<PathBuf>,
    pub state: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
}

fn triage_state(ctx: &Ctx, state: Option<PathBuf>) -> PathBuf {
    state.unwrap_or_else(|| ctx.path("triage"))
}

pub fn triage_serve(ctx: &Ctx, args: ServeArgs) -> anyhow::Result<Value> {
    let state = triage_state(ctx, args.state);
    let fresh = !state.join(latent_sv_triage::store::JOURNAL_FILE).is_file();
    let source = match (fresh, args.candidates) {
        (false, _) => PathBuf::new(),
        (true, Some(p)) => p,
        (true, None) => ctx.input(CANDIDATES, "mine")?,
    };
    let store = latent_sv_triage::Store::open_or_create(&state, || {
        let candidates: Vec<LatentCandidate> = jsonl::read(&source)?;
        let picked = latent_sv_triage::sample(&candidates, args.n, ctx.seed)?;
        let records: Vec<VulnRecord> = jsonl::read(ctx.path(RECORDS))?;
        let by_id: HashMap<String, VulnRecord> =
            records.iter().map(|r| (r.id.clone(), r.clone())).collect();
        let traces: Vec<LineTrace> = jsonl::read(ctx.path(TRACES))?;
        let grouped = group_traces(&records, &traces);
        let paths: BTreeMap<String, PathBuf> =
            serde_json::from_slice(&std::fs::read(ctx.path(REPOS))?)?;
        let repos = Repos::from_paths(&paths)?;
        latent_sv_triage::build_items(&picked, &by_id, &grouped, &repos)
    })?;
    let addr: std::net::SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| Validation(format!("bad listen address: {e}")))?;
    if let Some(d) = &args.static_dir {
        if !d.is_dir() {
            return Err(
                Validation(format!("static directory {} does not exist", d.display())).into(),
            );
        }
    }
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    rt.block_on(latent_sv_triage::serve(
        addr,
        Arc::new(store),
        args.static_dir,
    ))?;
    Ok(json!({ "state": state }))
}

pub fn triage_report(ctx: &Ctx, state: Option<PathBuf>) -> anyhow::Result<Value> {
    let state = triage_state(ctx, state);
    if !state.join(latent_sv_triage::store::JOURNAL_FILE).is_file() {
        return Err(Validation(format!("no triage journal in {}", state.display())).into());
    }
    let store = latent_sv_triage::Store::open_or_create(&state, || unreachable!("journal exists"))?;
    let kappa = store
        .kappa()
        .map(|k| serde_json::to_value(k).unwrap_or_default());
    let summary = store
        .summary()
        .map(|s| serde_json::to_value(s).unwrap_or_default());
    let show = |r: Result<Value, latent_sv_triage::TriageError>| match r {
        Ok(v) => v,
        Err(e) => json!({ "unavailable": { "code": e.code(), "message": e.to_string() } }),
    };
    Ok(json!({ "kappa": show(kappa), "summary": show(summary) }))
}
