//! Builds the evidence shown next to each sampled candidate.

use std::collections::HashMap;
use std::fmt::Write as _;

use latent_sv::mine::LatentCandidate;
use latent_sv::pipeline::Repos;
use latent_sv::repo::FileDiff;
use latent_sv::trace::{LineTrace, VulnRecord};

use crate::error::Result;
use crate::model::{ItemContext, Status, TriageItem};
use crate::sample::Sample;

/// Unified-style excerpt of the hunks touching `path`.
pub fn diff_excerpt(diff: &[FileDiff], path: &str) -> String {
    let mut out = String::new();
    for f in diff
        .iter()
        .filter(|f| f.old_path.as_deref() == Some(path) || f.new_path.as_deref() == Some(path))
    {
        let _ = writeln!(
            out,
            "--- {}\n+++ {}",
            f.old_path.as_deref().unwrap_or("/dev/null"),
            f.new_path.as_deref().unwrap_or("/dev/null")
        );
        for h in &f.hunks {
            let _ = writeln!(
                out,
                "@@ -{},{} +{},{} @@",
                h.old_start,
                h.old_lines.len(),
                h.new_start,
                h.new_lines.len()
            );
            for l in &h.old_lines {
                let _ = writeln!(
                    out,
                    "{}{}",
                    if l.changed { '-' } else { ' ' },
                    l.text.trim_end_matches(['\n', '\r'])
                );
            }
            for l in h.new_lines.iter().filter(|l| l.changed) {
                let _ = writeln!(out, "+{}", l.text.trim_end_matches(['\n', '\r']));
            }
        }
    }
    out
}

/// Items for a sample, with the origin function, the fixing diff, the trace
/// hops of the origin's lines and the intermediate commit's message.
pub fn build_items(
    sample: &Sample,
    records: &HashMap<String, VulnRecord>,
    traces: &HashMap<String, Vec<LineTrace>>,
    repos: &Repos,
) -> Result<Vec<TriageItem>> {
    sample
        .candidates
        .iter()
        .map(|c| {
            let mut context = ItemContext::default();
            if let Some(r) = records.get(&c.origin) {
                context.original_body = r.function.body.clone();
                if let Ok(repo) = repos.get(&r.function.project) {
                    context.vfc_diff_excerpt =
                        diff_excerpt(&repo.diff_commit(&r.vfc)?, &r.function.path);
                    context.interm_commit_message = repo.message(&c.interm_commit)?;
                }
            }
            if let Some(ts) = traces.get(&c.origin) {
                context.trace_hops = ts.iter().flat_map(|t| t.hops.iter().cloned()).collect();
            }
            Ok(item(c, context))
        })
        .collect()
}

pub fn item(c: &LatentCandidate, context: ItemContext) -> TriageItem {
    TriageItem {
        item_id: c.id.clone(),
        candidate: c.clone(),
        context,
        status: Status::Unlabeled,
    }
}
