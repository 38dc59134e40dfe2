//! Labeled function corpora with planted latent versions, for exercising
//! dataset assembly and the surrogate model without a repository.
//!
//! Vulnerable functions carry a few signal tokens from one of several
//! vulnerability families; non-vulnerable functions carry tokens from a
//! separate vocabulary; both are padded with shared filler tokens. Latent
//! versions of a vulnerable function keep its family and differ in filler
//! and in which family tokens appear.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Label, LabeledFunction, Provenance};
use crate::extract::{norm_hash, FunctionSnapshot};
use crate::mine::{LatentCandidate, OverlapClass};
use crate::repo::CommitRef;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub seed: u64,
    pub n_originals: usize,
    pub vulnerable_fraction: f64,
    pub n_latents: usize,
    /// Fraction of originals whose label is flipped.
    pub label_noise: f64,
    pub families: usize,
    pub family_tokens: usize,
    pub nonvuln_tokens: usize,
    pub filler_tokens: usize,
    /// Signal tokens per function.
    pub signal_per_function: usize,
    /// Filler statements per function.
    pub filler_statements: usize,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            seed: 0,
            n_originals: 500,
            vulnerable_fraction: 0.2,
            n_latents: 2000,
            label_noise: 0.05,
            families: 20,
            family_tokens: 10,
            nonvuln_tokens: 100,
            filler_tokens: 200,
            signal_per_function: 3,
            filler_statements: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub originals: Vec<LabeledFunction>,
    pub candidates: Vec<LatentCandidate>,
    /// Ids of originals whose label was flipped.
    pub flipped: BTreeSet<String>,
}

struct Gen<'a> {
    spec: &'a CorpusSpec,
    rng: ChaCha8Rng,
}

impl Gen<'_> {
    fn filler(&mut self) -> String {
        format!("c{}", self.rng.gen_range(0..self.spec.filler_tokens))
    }

    fn family_token(&mut self, family: usize) -> String {
        format!(
            "vf{family}_{}",
            self.rng.gen_range(0..self.spec.family_tokens)
        )
    }

    fn nonvuln_token(&mut self) -> String {
        format!("nv{}", self.rng.gen_range(0..self.spec.nonvuln_tokens))
    }

    fn filler_statement(&mut self) -> String {
        let (a, b, c) = (self.filler(), self.filler(), self.filler());
        format!("    {a} = {b}(ctx, {c});")
    }

    fn signal_statement(&mut self, token: &str) -> String {
        let a = self.filler();
        format!("    {a} = {token}(ctx, len);")
    }

    /// Body text and 1-based lines of signal statements.
    fn body(&mut self, name: &str, signals: &[String]) -> (String, Vec<usize>) {
        let mut statements: Vec<(String, bool)> = (0..self.spec.filler_statements)
            .map(|_| (self.filler_statement(), false))
            .collect();
        for s in signals {
            let at = self.rng.gen_range(0..=statements.len());
            statements.insert(at, (self.signal_statement(s), true));
        }
        let mut lines = vec![
            format!("static int {name}(Context *ctx, int len)"),
            "{".to_string(),
        ];
        let mut signal_lines = Vec::new();
        for (s, is_signal) in statements {
            lines.push(s);
            if is_signal {
                signal_lines.push(lines.len());
            }
        }
        lines.push("    return 0;".into());
        lines.push("}".into());
        (lines.join("\n"), signal_lines)
    }
}

fn fake_hash(kind: u8, n: usize) -> String {
    format!("{kind:02x}{n:038x}")
}

pub fn synthetic_corpus(spec: &CorpusSpec) -> SyntheticCorpus {
    let mut g = Gen {
        spec,
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
    };
    let n_vuln = (spec.n_originals as f64 * spec.vulnerable_fraction).round() as usize;
    let mut originals = Vec::with_capacity(spec.n_originals);
    let mut families = Vec::new();
    for i in 0..spec.n_originals {
        let vulnerable = i < n_vuln;
        let name = format!("fn_{i}");
        let id = format!("orig-{i:04}");
        let (body, lines, label) = if vulnerable {
            let family = g.rng.gen_range(0..spec.families);
            families.push((originals.len(), family));
            let signals: Vec<String> = (0..spec.signal_per_function)
                .map(|_| g.family_token(family))
                .collect();
            let (b, l) = g.body(&name, &signals);
            (b, l, Label::Vulnerable)
        } else {
            let signals: Vec<String> = (0..spec.signal_per_function)
                .map(|_| g.nonvuln_token())
                .collect();
            let (b, _) = g.body(&name, &signals);
            (b, Vec::new(), Label::Nonvulnerable)
        };
        originals.push(LabeledFunction {
            id,
            body,
            label,
            vuln_line_nos: lines,
            provenance: Provenance::Original,
            origin_id: None,
            project: None,
        });
    }

    let mut candidates = Vec::with_capacity(spec.n_latents);
    for k in 0..spec.n_latents {
        if families.is_empty() {
            break;
        }
        let (idx, family) = families[k % families.len()];
        let origin = &originals[idx];
        let name = format!("fn_{idx}");
        let signals: Vec<String> = (0..spec.signal_per_function)
            .map(|_| g.family_token(family))
            .collect();
        let (body, lines) = g.body(&name, &signals);
        let commit = fake_hash(0xc0, k);
        let n_lines = body.split('\n').count();
        candidates.push(LatentCandidate {
            id: format!("{}@{}", origin.id, &commit[..12]),
            origin: origin.id.clone(),
            snapshot: FunctionSnapshot {
                project: "synthetic".into(),
                commit: fake_hash(0xb0, k),
                path: "synthetic.c".into(),
                name,
                start_line: 1,
                end_line: n_lines,
                norm_hash: norm_hash(body.as_bytes()),
                body,
            },
            mapped_vuln_lines: lines,
            interm_commit: CommitRef {
                hash: commit,
                author_date: super::BASE_DATE + k as i64,
                parents: vec![fake_hash(0xb0, k)],
            },
            overlap: OverlapClass::Unclassified,
            filter_flags: BTreeSet::new(),
        });
    }

    let n_flip = (spec.n_originals as f64 * spec.label_noise).round() as usize;
    let mut order: Vec<usize> = (0..originals.len()).collect();
    order.shuffle(&mut g.rng);
    let mut flipped = BTreeSet::new();
    for &i in order.iter().take(n_flip) {
        let f = &mut originals[i];
        f.label = match f.label {
            Label::Vulnerable => Label::Nonvulnerable,
            Label::Nonvulnerable => Label::Vulnerable,
        };
        if f.label == Label::Nonvulnerable {
            f.vuln_line_nos.clear();
        }
        flipped.insert(f.id.clone());
    }
    SyntheticCorpus {
        originals,
        candidates,
        flipped,
    }
}
