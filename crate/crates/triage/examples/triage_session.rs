//! Mine latent candidates from several forged histories, sample them and run
//! a scripted two-labeler session against the store.
//!
//!     cargo run -p latent-sv-triage --example triage_session
//!     cargo run -p latent-sv-triage --example triage_session -- --serve 8080
//!
//! With `--serve` the sampled items are served over HTTP instead.

use std::collections::HashMap;
use std::sync::Arc;

use latent_sv::forge::{self, presets::EXACT_PRESETS};
use latent_sv::pipeline::{
    extract_records, group_traces, mine_records, original_functions, read_vfc_csv, trace_records,
    Repos,
};
use latent_sv::trace::TraceConfig;
use latent_sv_triage::{build_items, sample, Reason, Store, TriageLabel, Verdict};

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    env_logger::init();
    let port: Option<u16> = std::env::args()
        .skip_while(|a| a != "--serve")
        .nth(1)
        .and_then(|p| p.parse().ok());
    let tmp = tempfile::tempdir()?;

    let mut entries = Vec::new();
    for (i, name) in EXACT_PRESETS.iter().enumerate() {
        let dir = tmp.path().join(name);
        forge::generate(&forge::preset(name, i as u64)?, &dir)?;
        entries.extend(read_vfc_csv(dir.join("vfcs.csv"))?);
    }
    let repos = Repos::open(&entries)?;
    let cfg = TraceConfig::default();
    let records = extract_records(&entries, &repos, 4)?;
    let originals = original_functions(&records, &repos)?;
    let traces = group_traces(&records, &trace_records(&records, &repos, &cfg, 4)?);
    let (candidates, _) = mine_records(&records, &traces, &originals, &repos, &cfg, 4)?;

    let picked = sample(&candidates, 70, 7)?;
    println!(
        "{} candidate(s), {} sampled{}",
        candidates.len(),
        picked.candidates.len(),
        if picked.short {
            " (fewer fixing commits than requested)"
        } else {
            ""
        }
    );
    let by_id: HashMap<_, _> = records.iter().map(|r| (r.id.clone(), r.clone())).collect();
    let items = build_items(&picked, &by_id, &traces, &repos)?;
    let store = Arc::new(Store::open_or_create(tmp.path().join("triage"), || {
        Ok(items)
    })?);

    if let Some(port) = port {
        latent_sv_triage::serve(([127, 0, 0, 1], port).into(), store, None).await?;
        return Ok(());
    }

    // Both reject every third item; the second also rejects the last one.
    let n = store.items().len();
    for (i, item) in store.items().iter().enumerate() {
        for who in ["first", "second"] {
            let fp = i % 3 == 0 || (who == "second" && i + 1 == n);
            store.submit_label(TriageLabel {
                label_id: None,
                item_id: item.item_id.clone(),
                labeler_id: who.into(),
                verdict: if fp {
                    Verdict::FalsePositive
                } else {
                    Verdict::TruePositive
                },
                reason: if fp {
                    Reason::ChangedCodeContext
                } else {
                    Reason::NotApplicable
                },
                note: String::new(),
                timestamp: 0,
            })?;
        }
    }
    let first = &store.items()[0];
    println!(
        "first item {} carries {} trace hop(s) and a {}-line fix excerpt",
        first.item_id,
        first.context.trace_hops.len(),
        first.context.vfc_diff_excerpt.lines().count()
    );
    let k = store.kappa()?;
    println!(
        "kappa {:.3} over {} item(s)",
        k.pairs[0].kappa.kappa, k.pairs[0].kappa.n
    );
    for d in store.disagreements() {
        store.resolve(latent_sv_triage::Resolution {
            item_id: d.item.item_id,
            verdict: Verdict::TruePositive,
            reason: Reason::NotApplicable,
            note: "mapped line still present".into(),
            timestamp: 0,
        })?;
    }
    println!("{}", serde_json::to_string_pretty(&store.summary()?)?);
    Ok(())
}
