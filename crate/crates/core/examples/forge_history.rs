//! Generate a synthetic repository from a named preset and print its
//! commits and planted vulnerabilities.
//!
//!     cargo run --example forge_history -- [preset] [seed] [out_dir]

use latent_sv::forge::{self, preset_names};

fn main() -> latent_sv::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "refactor-chain".into());
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let tmp = tempfile::tempdir()?;
    let out = args
        .next()
        .map(Into::into)
        .unwrap_or_else(|| tmp.path().join("forged"));

    let spec = forge::preset(&name, seed)?;
    let (repo_dir, truth) = forge::generate(&spec, &out)?;
    println!("{name} (seed {seed}) -> {}", repo_dir.display());
    println!("presets: {}", preset_names().join(", "));
    println!();
    for c in &truth.commits {
        let event = c.event.as_ref().map_or("initial import", |e| e.label());
        println!("{}  {}  {event}", &c.hash[..10], c.author_date);
    }
    for v in &truth.vulnerabilities {
        println!();
        println!("vulnerability {} in {}:{}", v.vid, v.path, v.function);
        println!("  introduced by {}", &v.vic_hash[..10]);
        println!("  fixed by      {}", &v.vfc_hash[..10]);
        for l in &v.lines {
            println!("  line {:>3}: {}", l.line_no, l.content.trim());
        }
        println!(
            "  {} latent version(s), {} expected false positive(s)",
            v.latents.len(),
            v.expected_false_positives.len()
        );
    }
    println!();
    print!("{}", truth.vfcs_csv("repo"));
    Ok(())
}
