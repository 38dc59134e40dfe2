//! `latent-sv`: run the mining pipeline stage by stage.
//!
//! Every stage reads the previous stage's artifacts from the output
//! directory and prints a JSON summary on stdout. Failures are printed as a
//! JSON diagnostic on stderr; the exit status is 2 for invalid input or
//! configuration and 1 for anything else.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use latent_sv::dataset::NoiseMode;
use latent_sv_triage::TriageError;
use serde_json::json;

use commands::{BuildArgs, Ctx, EvalArgs, FilterMode, ServeArgs};
use config::PipelineConfig;

/// Invalid input or configuration, reported with exit status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct Validation(pub String);

#[derive(Parser)]
#[command(
    name = "latent-sv",
    version,
    about = "Mine latent vulnerable function versions from local git history",
    after_help = "Repositories are read from local clones only; nothing is fetched. \
                  Clone each project listed in the VFC file before running `extract`."
)]
struct Cli {
    /// TOML pipeline config.
    #[arg(long, global = true, env = "LATENTMINER_CONFIG")]
    config: Option<PathBuf>,
    /// Artifact directory; defaults to the config's `output_dir`.
    #[arg(long, global = true, env = "LATENTMINER_OUT")]
    out: Option<PathBuf>,
    /// Base seed; defaults to the config's `base_seed`.
    #[arg(long, global = true, env = "LATENTMINER_SEED")]
    seed: Option<u64>,
    /// Worker threads inside a stage.
    #[arg(long, global = true, env = "LATENTMINER_JOBS")]
    jobs: Option<usize>,
    /// Line similarity needed to map a line across a rewriting commit.
    #[arg(long, global = true, env = "LATENTMINER_SIM_THRESHOLD")]
    sim_threshold: Option<f64>,
    /// Longest blame chain followed per line.
    #[arg(long, global = true, env = "LATENTMINER_MAX_HOPS")]
    max_hops: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic history with known answers.
    Forge {
        #[arg(long)]
        preset: String,
        /// Target directory; defaults to `<out>/forge/<preset>`.
        #[arg(long)]
        dest: Option<PathBuf>,
    },
    /// Read the VFC list and extract the vulnerable functions and originals.
    Extract {
        #[arg(long, env = "LATENTMINER_VFCS")]
        vfcs: Option<PathBuf>,
    },
    /// Trace every vulnerable line back to its introducing commit.
    Trace,
    /// Enumerate latent versions between introducing and fixing commits.
    Mine,
    /// Apply one noise filter to the mined candidates.
    Filter {
        #[arg(long, value_enum)]
        mode: FilterMode,
        /// Candidates to filter; defaults to `<out>/candidates.jsonl`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// JSONL of `{id, p_nonvuln}` for the `st` filter.
        #[arg(long)]
        probs: Option<PathBuf>,
        /// JSONL of `{id, dims, vocab_id}` for the `cr` filter.
        #[arg(long)]
        vectors: Option<PathBuf>,
    },
    /// Write train/val/test rounds.
    Build {
        #[arg(long, env = "LATENTMINER_ROUNDS")]
        rounds: Option<usize>,
        /// Attach latent versions to each training split.
        #[arg(long)]
        latent: bool,
        /// Noise filter for attached latents: none, lic, st or cr.
        #[arg(long)]
        noise: Option<String>,
        #[arg(long)]
        candidates: Option<PathBuf>,
        #[arg(long)]
        probs: Option<PathBuf>,
        #[arg(long)]
        vectors: Option<PathBuf>,
    },
    /// Score each round's test split with the built-in token model.
    Predict {
        /// Defaults to `<out>/rounds`.
        #[arg(long)]
        rounds_dir: Option<PathBuf>,
    },
    /// Metrics for prediction files, with a paired test against a baseline.
    Eval {
        #[arg(long)]
        preds: Vec<PathBuf>,
        /// Labelled functions the predictions refer to; one, or one per `--preds`.
        #[arg(long)]
        test: Vec<PathBuf>,
        /// Baseline predictions, one per `--preds`, on the same test files.
        #[arg(long)]
        baseline: Vec<PathBuf>,
        /// Use every `round_*/preds.jsonl` and `test.jsonl` under this directory.
        #[arg(long)]
        rounds_dir: Option<PathBuf>,
        #[arg(long)]
        baseline_dir: Option<PathBuf>,
        #[arg(long, default_value_t = latent_sv::eval::DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Dataset statistics; defaults to the originals plus mining counts.
    Stats {
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Datasets keeping a fraction of the vulnerable originals and all their latents.
    Ablate {
        #[arg(long, value_delimiter = ',')]
        fractions: Vec<f64>,
    },
    /// Print the resolved config as TOML.
    Config,
    /// Manual validation of mined candidates.
    Triage {
        #[command(subcommand)]
        command: TriageCommand,
    },
}

#[derive(Subcommand)]
enum TriageCommand {
    /// Sample candidates on first start and serve the labeling API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Sample size.
        #[arg(long, default_value_t = latent_sv_triage::DEFAULT_SAMPLE_SIZE)]
        n: usize,
        #[arg(long)]
        candidates: Option<PathBuf>,
        /// Journal directory; defaults to `<out>/triage`.
        #[arg(long)]
        state: Option<PathBuf>,
        /// Directory of UI files served for unmatched paths.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
    /// Agreement and false-positive summary from the journal.
    Report {
        #[arg(long)]
        state: Option<PathBuf>,
    },
}

impl Command {
    fn stage(&self) -> &'static str {
        match self {
            Command::Forge { .. } => "forge",
            Command::Extract { .. } => "extract",
            Command::Trace => "trace",
            Command::Mine => "mine",
            Command::Filter { .. } => "filter",
            Command::Build { .. } => "build",
            Command::Predict { .. } => "predict",
            Command::Eval { .. } => "eval",
            Command::Stats { .. } => "stats",
            Command::Ablate { .. } => "ablate",
            Command::Config => "config",
            Command::Triage { .. } => "triage",
        }
    }
}

fn context(cli: &Cli) -> anyhow::Result<Ctx> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(t) = cli.sim_threshold {
        cfg.trace.sim_threshold = t;
    }
    if let Some(h) = cli.max_hops {
        cfg.trace.max_hops = h;
    }
    cfg.validate()?;
    let jobs = match cli.jobs {
        Some(0) => return Err(Validation("--jobs must be at least 1".into()).into()),
        Some(j) => j,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.base_seed = seed;
    }
    Ok(Ctx {
        out: cfg.output_dir.clone(),
        seed: cfg.base_seed,
        jobs,
        cfg,
    })
}

fn run(cli: Cli) -> anyhow::Result<serde_json::Value> {
    let ctx = context(&cli)?;
    match cli.command {
        Command::Forge { preset, dest } => commands::forge(&ctx, &preset, dest),
        Command::Extract { vfcs } => commands::extract(&ctx, vfcs),
        Command::Trace => commands::trace(&ctx),
        Command::Mine => commands::mine(&ctx),
        Command::Filter {
            mode,
            input,
            probs,
            vectors,
        } => commands::filter(&ctx, mode, input, probs, vectors),
        Command::Build {
            rounds,
            latent,
            noise,
            candidates,
            probs,
            vectors,
        } => {
            let noise = noise
                .map(|n| n.parse::<NoiseMode>())
                .transpose()
                .map_err(|e| Validation(e.to_string()))?;
            commands::build(
                &ctx,
                BuildArgs {
                    rounds,
                    latent,
                    noise,
                    candidates,
                    probs,
                    vectors,
                },
            )
        }
        Command::Predict { rounds_dir } => commands::predict(&ctx, rounds_dir),
        Command::Eval {
            preds,
            test,
            baseline,
            rounds_dir,
            baseline_dir,
            threshold,
        } => commands::eval(
            &ctx,
            EvalArgs {
                preds,
                test,
                baseline,
                rounds_dir,
                baseline_dir,
                threshold,
            },
        ),
        Command::Stats { dataset } => commands::stats_cmd(&ctx, dataset),
        Command::Ablate { fractions } => commands::ablate(&ctx, fractions),
        Command::Config => {
            print!("{}", ctx.cfg.to_toml());
            Ok(serde_json::Value::Null)
        }
        Command::Triage { command } => match command {
            TriageCommand::Serve {
                port,
                host,
                n,
                candidates,
                state,
                static_dir,
            } => commands::triage_serve(
                &ctx,
                ServeArgs {
                    host,
                    port,
                    n,
                    candidates,
                    state,
                    static_dir,
                },
            ),
            TriageCommand::Report { state } => commands::triage_report(&ctx, state),
        },
    }
}

/// Variant name of an error's `Debug` form.
fn variant(debug: String) -> String {
    debug
        .split(|c: char| !c.is_alphanumeric() && c != '_')
        .next()
        .unwrap_or_default()
        .to_string()
}

/// Exit status and error kind of the first recognised cause.
fn classify(err: &anyhow::Error) -> (u8, String) {
    for cause in err.chain() {
        if cause.is::<Validation>() {
            return (2, "Validation".into());
        }
        if let Some(e) = cause.downcast_ref::<latent_sv::Error>() {
            return (
                if e.is_validation() { 2 } else { 1 },
                variant(format!("{e:?}")),
            );
        }
        if let Some(e) = cause.downcast_ref::<TriageError>() {
            let code = match e {
                TriageError::Pipeline(inner) if inner.is_validation() => 2,
                TriageError::EmptyInput(_) | TriageError::InvalidLabel(_) => 2,
                _ => 1,
            };
            return (code, e.code().to_string());
        }
        if cause.is::<std::io::Error>() {
            return (1, "Io".into());
        }
    }
    (1, "Internal".into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let stage = cli.command.stage();
    match run(cli) {
        Ok(serde_json::Value::Null) => ExitCode::SUCCESS,
        Ok(summary) => {
            println!(
                "{}",
                json!({ "stage": stage, "status": "ok", "result": summary })
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            let (code, kind) = classify(&e);
            let causes: Vec<String> = e.chain().skip(1).map(|c| c.to_string()).collect();
            eprintln!(
                "{}",
                json!({
                    "stage": stage,
                    "status": "error",
                    "exit_code": code,
                    "kind": kind,
                    "message": e.to_string(),
                    "causes": causes,
                })
            );
            ExitCode::from(code)
        }
    }
}
