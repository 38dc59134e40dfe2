//! Build ten train/val/test rounds with latent versions attached to the
//! training split, write them to disk, and print per-round counts.
//!
//!     cargo run --example build_rounds -- [out_dir] [noise_mode]

use latent_sv::dataset::{
    build_rounds, stats, write_round, NoiseContext, NoiseMode, RoundSpec, DEFAULT_ROUNDS,
};
use latent_sv::forge::corpus::{synthetic_corpus, CorpusSpec};

fn main() -> latent_sv::Result<()> {
    let mut args = std::env::args().skip(1);
    let tmp = tempfile::tempdir()?;
    let out = args
        .next()
        .map(Into::into)
        .unwrap_or_else(|| tmp.path().to_path_buf());
    let mode: NoiseMode = args.next().as_deref().unwrap_or("none").parse()?;

    let corpus = synthetic_corpus(&CorpusSpec::default());
    let before = stats(&corpus.originals);
    println!(
        "originals: {} functions, SV ratio {:.3}",
        before.n_functions, before.sv_ratio
    );

    let template = RoundSpec::new(0, 0).with_latent(mode);
    let rounds = build_rounds(
        &corpus.originals,
        &corpus.candidates,
        template,
        100,
        DEFAULT_ROUNDS,
        NoiseContext::default(),
    )?;
    println!("round  seed  train  latent  purged  val  test  train SV ratio");
    for r in &rounds {
        write_round(&out, r)?;
        let c = &r.manifest.counts;
        println!(
            "{:>5}  {:>4}  {:>5}  {:>6}  {:>6}  {:>3}  {:>4}  {:.3}",
            r.spec.round_index,
            r.spec.seed,
            c.train,
            c.train_latent,
            c.purged,
            c.val,
            c.test,
            stats(&r.train).sv_ratio
        );
    }
    println!("written under {}", out.display());
    Ok(())
}
