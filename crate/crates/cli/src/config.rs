//! Run configuration: command-line flags override the TOML file, which overrides defaults.
//!
//! ```toml
//! weights = [0.1, 0.2, 0.7]      # or "0.1,0.2,0.7"
//! seed = 7
//! workers = 4
//! rule = "t+f"
//! method = "drm"
//! mode = "combined"
//! step = 0.1
//! pairs_per_instance = 1
//! offline_scores = "scores.jsonl"  # relative to this file
//! append_reference_answer = false
//!
//! [judges.relevance]
//! base_url = "http://localhost:8001"
//! max_in_flight = 4
//!
//! [judges.coherence]
//! base_url = "http://localhost:8002"
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use drm_core::{AdvantageMode, DrmWeights, SubsetRule, SupervisionMethod};
use drm_judges::{FetchOptions, JudgeEndpointConfig};
use serde::Deserialize;

use crate::args::{GlobalArgs, JudgeArgs};
use crate::failure::Failure;

pub const DEFAULT_STEP: f64 = 0.1;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    weights: Option<WeightsSpec>,
    seed: Option<u64>,
    workers: Option<usize>,
    rule: Option<String>,
    method: Option<String>,
    mode: Option<String>,
    step: Option<f64>,
    pairs_per_instance: Option<usize>,
    offline_scores: Option<PathBuf>,
    append_reference_answer: Option<bool>,
    #[serde(default)]
    judges: JudgesSection,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum WeightsSpec {
    Text(String),
    Triple([f64; 3]),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct JudgesSection {
    relevance: Option<JudgeEndpointConfig>,
    coherence: Option<JudgeEndpointConfig>,
}

/// Where missing judge scores come from.
#[derive(Debug, Clone)]
pub enum JudgeSource {
    None,
    Endpoints {
        relevance: JudgeEndpointConfig,
        coherence: JudgeEndpointConfig,
        options: FetchOptions,
    },
    Offline(PathBuf),
}

/// Settings shared by every command after merging flags, file and defaults.
#[derive(Debug)]
pub struct Settings {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub workers: usize,
    pub seed: u64,
    file: FileConfig,
    file_dir: PathBuf,
}

impl Settings {
    pub fn load(global: &GlobalArgs) -> Result<Self, Failure> {
        let (file, file_dir) = match &global.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Failure::opening(path, e))?;
                let file: FileConfig = toml::from_str(&text)
                    .map_err(|e| Failure::schema(format!("{}: {e}", path.display())))?;
                let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (file, dir)
            }
            None => (FileConfig::default(), PathBuf::new()),
        };
        Ok(Self {
            input: global.input.clone(),
            output: global.output.clone(),
            workers: global.workers.or(file.workers).unwrap_or(0),
            seed: global.seed.or(file.seed).unwrap_or(0),
            file,
            file_dir,
        })
    }

    pub fn weights(&self, flag: Option<&str>) -> Result<DrmWeights, Failure> {
        let parsed = match (flag, &self.file.weights) {
            (Some(text), _) => DrmWeights::from_str(text),
            (None, Some(WeightsSpec::Text(text))) => DrmWeights::from_str(text),
            (None, Some(WeightsSpec::Triple([a, b, c]))) => DrmWeights::new(*a, *b, *c),
            (None, None) => Ok(DrmWeights::default()),
        };
        parsed.map_err(Failure::from)
    }

    pub fn rule(&self, flag: Option<&str>) -> Result<SubsetRule, Failure> {
        let text = flag.or(self.file.rule.as_deref()).unwrap_or("any");
        SubsetRule::from_str(text).map_err(Failure::from)
    }

    pub fn method(&self, flag: Option<&str>) -> Result<SupervisionMethod, Failure> {
        let text = flag.or(self.file.method.as_deref()).unwrap_or("drm");
        match text.to_ascii_lowercase().as_str() {
            "drm" => Ok(SupervisionMethod::Drm),
            "rlvr" => Ok(SupervisionMethod::Rlvr { seed: self.seed }),
            other => Err(Failure::validation(format!(
                "unknown method `{other}` (expected drm or rlvr)"
            ))),
        }
    }

    pub fn mode(&self, flag: Option<&str>) -> Result<AdvantageMode, Failure> {
        let text = flag.or(self.file.mode.as_deref()).unwrap_or("combined");
        AdvantageMode::from_str(text).map_err(Failure::from)
    }

    pub fn step(&self, flag: Option<f64>) -> f64 {
        flag.or(self.file.step).unwrap_or(DEFAULT_STEP)
    }

    pub fn pairs_per_instance(&self, flag: Option<usize>) -> Result<usize, Failure> {
        let n = flag.or(self.file.pairs_per_instance).unwrap_or(1);
        if n == 0 {
            return Err(Failure::validation("pairs-per-instance must be at least 1"));
        }
        Ok(n)
    }

    /// Resolves the judge source. Endpoints and an offline file are mutually exclusive.
    pub fn judge_source(&self, flags: &JudgeArgs) -> Result<JudgeSource, Failure> {
        let offline = match &flags.offline_scores {
            Some(path) => Some(path.clone()),
            None => self
                .file
                .offline_scores
                .as_ref()
                .map(|p| self.file_dir.join(p)),
        };
        let endpoint =
            |flag: &Option<String>, file: &Option<JudgeEndpointConfig>| match (flag, file) {
                (Some(url), Some(cfg)) => Some(JudgeEndpointConfig {
                    base_url: url.clone(),
                    ..cfg.clone()
                }),
                (Some(url), None) => Some(JudgeEndpointConfig::new(url.clone())),
                (None, cfg) => cfg.clone(),
            };
        let relevance = endpoint(&flags.relevance_url, &self.file.judges.relevance);
        let coherence = endpoint(&flags.coherence_url, &self.file.judges.coherence);
        let options = FetchOptions {
            append_reference_answer: flags.append_reference_answer
                || self.file.append_reference_answer.unwrap_or(false),
        };
        match (relevance, coherence, offline) {
            (None, None, None) => Ok(JudgeSource::None),
            (None, None, Some(path)) => Ok(JudgeSource::Offline(path)),
            (Some(relevance), Some(coherence), None) => {
                relevance.validate()?;
                coherence.validate()?;
                Ok(JudgeSource::Endpoints {
                    relevance,
                    coherence,
                    options,
                })
            }
            (Some(_), None, None) | (None, Some(_), None) => Err(Failure::validation(
                "both a relevance and a coherence judge endpoint are required",
            )),
            (_, _, Some(_)) => Err(Failure::validation(
                "judge endpoints and an offline score file are mutually exclusive",
            )),
        }
    }
}
