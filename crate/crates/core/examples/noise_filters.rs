//! Apply the three noise filters: latest-introducing-commit on a forged
//! history with two introducing commits, and self-training and centroid
//! removal on a synthetic corpus scored by the token model.
//!
//!     cargo run --example noise_filters

use std::collections::HashSet;

use latent_sv::dataset::{split, RoundSpec};
use latent_sv::filter::{filter_cr, filter_lic, filter_st, Centroids};
use latent_sv::forge;
use latent_sv::forge::corpus::{synthetic_corpus, CorpusSpec};
use latent_sv::pipeline::{
    extract_records, group_traces, mine_records, original_functions, read_vfc_csv, trace_records,
    Repos,
};
use latent_sv::surrogate::TokenModel;
use latent_sv::trace::TraceConfig;

fn main() -> latent_sv::Result<()> {
    let tmp = tempfile::tempdir()?;
    forge::generate(&forge::preset("two-line-lic", 3)?, tmp.path())?;
    let entries = read_vfc_csv(tmp.path().join("vfcs.csv"))?;
    let repos = Repos::open(&entries)?;
    let cfg = TraceConfig::default();
    let records = extract_records(&entries, &repos, 1)?;
    let originals = original_functions(&records, &repos)?;
    let traces = group_traces(&records, &trace_records(&records, &repos, &cfg, 1)?);
    let (candidates, _) = mine_records(&records, &traces, &originals, &repos, &cfg, 1)?;
    let kept = filter_lic(&candidates, &traces)?;
    println!(
        "lic: {} of {} candidates after the latest introducing commit",
        kept.len(),
        candidates.len()
    );

    let corpus = synthetic_corpus(&CorpusSpec::default());
    let (train, _, _) = split(&corpus.originals, &RoundSpec::new(0, 0))?;
    let in_train: HashSet<&str> = train.iter().map(|f| f.id.as_str()).collect();
    let eligible: Vec<_> = corpus
        .candidates
        .iter()
        .filter(|c| in_train.contains(c.origin.as_str()))
        .cloned()
        .collect();
    let model = TokenModel::fit(&train, 1.0)?;

    let st = filter_st(&eligible, &model)?;
    println!(
        "st:  {} of {} candidates scored at most 0.5 non-vulnerable",
        st.len(),
        eligible.len()
    );

    let (mut vuln, mut non) = (Vec::new(), Vec::new());
    for f in &train {
        let v = model.embed(&f.body);
        if f.is_vulnerable() {
            vuln.push(v)
        } else {
            non.push(v)
        }
    }
    let centroids = Centroids::fit(&vuln, &non)?;
    let cr = filter_cr(&eligible, &model, &centroids)?;
    println!(
        "cr:  {} of {} candidates not closer to the non-vulnerable centroid",
        cr.len(),
        eligible.len()
    );
    Ok(())
}
