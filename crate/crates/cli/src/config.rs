use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use latent_sv::dataset::{NoiseMode, RoundSpec, SplitUnit, DEFAULT_ROUNDS};
use latent_sv::trace::TraceConfig;
use serde::{Deserialize, Serialize};

use crate::Validation;

/// Round defaults applied when `build` flags are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoundDefaults {
    pub rounds: usize,
    pub ratios: [f64; 3],
    pub use_latent: bool,
    pub noise_mode: NoiseMode,
    pub split_unit: SplitUnit,
    pub smoothing: f64,
}

impl Default for RoundDefaults {
    fn default() -> Self {
        let spec = RoundSpec::new(0, 0);
        RoundDefaults {
            rounds: DEFAULT_ROUNDS,
            ratios: spec.ratios,
            use_latent: spec.use_latent,
            noise_mode: spec.noise_mode,
            split_unit: spec.split_unit,
            smoothing: 1.0,
        }
    }
}

impl RoundDefaults {
    pub fn template(&self) -> RoundSpec {
        RoundSpec {
            ratios: self.ratios,
            use_latent: self.use_latent,
            noise_mode: self.noise_mode,
            split_unit: self.split_unit,
            ..RoundSpec::new(0, 0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Fixing-commit list, `project,repo_path,commit_hash,dataset_id`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vfcs: Option<PathBuf>,
    /// Repository path per project, overriding the list's `repo_path`.
    pub repos: BTreeMap<String, PathBuf>,
    pub output_dir: PathBuf,
    pub base_seed: u64,
    pub trace: TraceConfig,
    pub rounds: RoundDefaults,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            vfcs: None,
            repos: BTreeMap::new(),
            output_dir: PathBuf::from("out"),
            base_seed: 0,
            trace: TraceConfig::default(),
            rounds: RoundDefaults::default(),
        }
    }
}

impl PipelineConfig {
    /// Parse a TOML config. Relative paths are taken from the file's directory.
    pub fn load(path: &Path) -> Result<PipelineConfig, Validation> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Validation(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = PipelineConfig::from_toml(&text)
            .map_err(|e| Validation(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(v) = cfg.vfcs.as_mut() {
            rebase(v);
        }
        cfg.repos.values_mut().for_each(rebase);
        rebase(&mut cfg.output_dir);
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<PipelineConfig, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Every referenced path exists and every parameter is in range.
    pub fn validate(&self) -> Result<(), Validation> {
        if let Some(v) = &self.vfcs {
            if !v.is_file() {
                return Err(Validation(format!(
                    "VFC list {} does not exist",
                    v.display()
                )));
            }
        }
        for (project, p) in &self.repos {
            if !p.is_dir() {
                return Err(Validation(format!(
                    "repository for `{project}` at {} does not exist",
                    p.display()
                )));
            }
        }
        if self.rounds.rounds == 0 {
            return Err(Validation("rounds must be at least 1".into()));
        }
        if self.rounds.smoothing.is_nan() || self.rounds.smoothing <= 0.0 {
            return Err(Validation("smoothing must be positive".into()));
        }
        self.trace
            .validate()
            .map_err(|e| Validation(e.to_string()))?;
        self.rounds
            .template()
            .validate()
            .map_err(|e| Validation(e.to_string()))?;
        Ok(())
    }
}
