//! Enumerate the latent vulnerable versions of a function between its
//! introducing and fixing commits.
//!
//!     cargo run --example mine_latents -- [preset] [seed]

use latent_sv::forge;
use latent_sv::pipeline::{
    extract_records, group_traces, mine_records, original_functions, read_vfc_csv, trace_records,
    Repos,
};
use latent_sv::trace::TraceConfig;

fn main() -> latent_sv::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "two-line-lic".into());
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let tmp = tempfile::tempdir()?;
    let (_, truth) = forge::generate(&forge::preset(&name, seed)?, tmp.path())?;

    let entries = read_vfc_csv(tmp.path().join("vfcs.csv"))?;
    let repos = Repos::open(&entries)?;
    let cfg = TraceConfig::default();
    let records = extract_records(&entries, &repos, 2)?;
    let originals = original_functions(&records, &repos)?;
    let traces = trace_records(&records, &repos, &cfg, 2)?;
    let grouped = group_traces(&records, &traces);
    let (candidates, summary) = mine_records(&records, &grouped, &originals, &repos, &cfg, 2)?;

    println!(
        "{} record(s), {} raw latent(s), {} after dedup",
        summary.records, summary.raw, summary.deduped
    );
    for c in &candidates {
        println!(
            "{}  {}:{} lines {:?}  overlap={:?}",
            c.interm_commit.short(),
            c.snapshot.path,
            c.snapshot.name,
            c.mapped_vuln_lines,
            c.overlap
        );
    }
    let expected: usize = truth.vulnerabilities.iter().map(|v| v.mined().len()).sum();
    println!("ground truth expects {expected} mined version(s)");
    Ok(())
}
