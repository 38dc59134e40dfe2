#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::Path;

use latent_sv::forge::{self, GroundTruth, LatentTruth, PlantedVulnerability};
use latent_sv::mine::{mine_latent, LatentCandidate};
use latent_sv::repo::RepoHandle;
use latent_sv::trace::{
    earliest_vic, trace_record, vulnerable_lines_of, LineTrace, TraceConfig, VulnRecord,
};

pub struct Pipeline {
    pub repo: RepoHandle,
    pub truth: GroundTruth,
    pub per_vuln: Vec<VulnRun>,
}

pub struct VulnRun {
    pub planted: PlantedVulnerability,
    pub record: VulnRecord,
    pub traces: Vec<LineTrace>,
    pub candidates: Vec<LatentCandidate>,
}

pub fn forge_preset(name: &str, seed: u64, dir: &Path) -> (RepoHandle, GroundTruth) {
    let spec = forge::preset(name, seed).unwrap();
    let (repo_dir, truth) = forge::generate(&spec, dir).unwrap();
    (RepoHandle::open(repo_dir).unwrap(), truth)
}

pub fn run(name: &str, seed: u64, dir: &Path, cfg: &TraceConfig) -> Pipeline {
    let (repo, truth) = forge_preset(name, seed, dir);
    let mut per_vuln = Vec::new();
    for v in &truth.vulnerabilities {
        let vfc = repo.resolve(&v.vfc_hash).unwrap();
        let diff = repo.diff_commit(&vfc).unwrap();
        let records = vulnerable_lines_of(&repo, &vfc, &diff).unwrap();
        assert_eq!(records.len(), 1, "{name}/{seed}: one record per fix");
        let record = records.into_iter().next().unwrap();
        let traces = trace_record(&repo, &record, cfg).unwrap();
        let candidates = mine_latent(&repo, &record, &traces, cfg).unwrap();
        per_vuln.push(VulnRun {
            planted: v.clone(),
            record,
            traces,
            candidates,
        });
    }
    Pipeline {
        repo,
        truth,
        per_vuln,
    }
}

pub fn as_truth(c: &LatentCandidate) -> LatentTruth {
    LatentTruth {
        commit: c.interm_commit.hash.clone(),
        snapshot_commit: c.snapshot.commit.clone(),
        path: c.snapshot.path.clone(),
        function: c.snapshot.name.clone(),
        line_nos: c.mapped_vuln_lines.clone(),
    }
}

pub fn mined_set(run: &VulnRun) -> BTreeSet<LatentTruth> {
    run.candidates.iter().map(as_truth).collect()
}

pub fn vic_of(run: &VulnRun) -> String {
    earliest_vic(&run.traces).unwrap().hash
}

pub mod fixtures;
pub mod oracles;

use rand::Rng;

/// Random true-positive functions: up to `max_fns` functions of up to
/// `max_lines` lines, scores on a coarse grid so ties occur.
pub fn random_scored(
    rng: &mut impl Rng,
    max_fns: usize,
    max_lines: usize,
) -> Vec<latent_sv::eval::ScoredFunction> {
    let n = rng.gen_range(1..=max_fns);
    (0..n)
        .map(|i| {
            let lines = rng.gen_range(1..=max_lines);
            let scores: Vec<f64> = (0..lines)
                .map(|_| rng.gen_range(0..8) as f64 / 4.0)
                .collect();
            let mut vuln: Vec<usize> = (1..=lines).filter(|_| rng.gen_bool(0.2)).collect();
            if vuln.is_empty() {
                vuln.push(rng.gen_range(1..=lines));
            }
            latent_sv::eval::ScoredFunction {
                id: format!("f{i:03}"),
                line_scores: scores,
                vuln_lines: vuln,
            }
        })
        .collect()
}
