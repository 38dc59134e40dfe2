//! Trace the lines deleted by a fixing commit back to the commit that
//! introduced them, across a function extraction, a file rename and a
//! re-indentation.
//!
//!     cargo run --example trace_vic -- [preset] [seed]

use latent_sv::forge;
use latent_sv::pipeline::{extract_records, read_vfc_csv, trace_records, Repos};
use latent_sv::trace::{earliest_vic, TraceConfig};

fn main() -> latent_sv::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "refactor-chain".into());
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let tmp = tempfile::tempdir()?;
    let (_, truth) = forge::generate(&forge::preset(&name, seed)?, tmp.path())?;

    let entries = read_vfc_csv(tmp.path().join("vfcs.csv"))?;
    let repos = Repos::open(&entries)?;
    let records = extract_records(&entries, &repos, 1)?;
    let cfg = TraceConfig::default();
    for record in &records {
        println!(
            "{}  ({} vulnerable line(s))",
            record.id,
            record.vuln_lines.len()
        );
        let traces = trace_records(std::slice::from_ref(record), &repos, &cfg, 1)?;
        for t in &traces {
            println!("  line {} of {}", t.origin.line_no, t.origin.path);
            for h in &t.hops {
                let sim = h
                    .similarity
                    .map(|s| format!(" sim={s:.3}"))
                    .unwrap_or_default();
                println!(
                    "    {:<13} {}  {}:{}{sim}  {}",
                    format!("{:?}", h.kind),
                    h.commit.short(),
                    h.path,
                    h.line_no,
                    h.content.trim()
                );
            }
            println!("    -> {}", t.vic.short());
        }
        let vic = earliest_vic(&traces)?;
        let planted = truth
            .vulnerabilities
            .iter()
            .find(|v| v.vfc_hash == record.vfc.hash);
        if let Some(v) = planted {
            let verdict = if v.vic_hash == vic.hash {
                "matches"
            } else {
                "differs from"
            };
            println!(
                "  earliest VIC {} {verdict} the planted introducer",
                vic.short()
            );
        }
    }
    Ok(())
}
