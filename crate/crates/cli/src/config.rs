//! Run configuration.
//!
//! A TOML file; every section is optional and unknown keys are rejected.
//!
//! ```toml
//! seed = 7
//! out_dir = "out"
//! workers = 4
//!
//! [synth]
//! n_twin_pairs = 100
//! n_singles = 50
//! images_per_subject = 4
//! dim = 64
//! sigma_image = 0.05
//! delta_twin = 0.3
//! spread = 3.0
//!
//! [data]                 # defaults to the synth outputs under out_dir
//! manifest = "manifest.csv"
//! image_map = "images.csv"
//! embeddings = "embeddings.emb"
//!
//! [train]
//! learning_rate = 1e-3
//! margin = 0.5
//! epochs = 4
//! steps_per_epoch = 200
//! batch_size = 32
//! momentum = 0.0         # 0 means plain SGD
//! d_out = 64
//! hidden = 0             # 0 means a single linear layer
//! activation = "tanh"    # identity | tanh
//! lookalikes = 10
//! split_fraction = 0.8
//! twin_top_fraction = 1.0
//!
//! [match]
//! score = "comparison"   # comparison | similarity
//! metric = "cosine_mapped"     # cosine_mapped | inverse_l2
//! inversion = "batch_relative"   # batch_relative | calibrated
//! filter = "nonmated"    # mated | nonmated | all
//! retain_at = "T"        # "T" or a number
//! block_size = 64
//! bins = 512
//!
//! [analysis]
//! fmr_target = 1e-3
//! normalization = "minmax"
//! sweep = [0.5, 0.6, 0.7]   # empty means 21 steps over the observed range
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SEED_ENV: &str = "LOOKALIKE_LAB_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub synth: SynthSection,
    pub data: Option<DataSection>,
    pub train: TrainSection,
    #[serde(rename = "match")]
    pub matching: MatchSection,
    pub analysis: AnalysisSection,
    /// Directory relative paths are resolved against; not part of the hash.
    #[serde(skip)]
    pub base: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            workers: 1,
            synth: SynthSection::default(),
            data: None,
            train: TrainSection::default(),
            matching: MatchSection::default(),
            analysis: AnalysisSection::default(),
            base: PathBuf::from("."),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSection {
    pub n_twin_pairs: usize,
    pub n_singles: usize,
    pub images_per_subject: usize,
    pub dim: usize,
    pub sigma_image: f64,
    pub delta_twin: f64,
    pub spread: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let d = lookalike_core::synth::SynthConfig::default();
        Self {
            n_twin_pairs: d.n_twin_pairs,
            n_singles: 50,
            images_per_subject: d.images_per_subject,
            dim: d.dim,
            sigma_image: d.sigma_image,
            delta_twin: d.delta_twin,
            spread: d.spread,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub manifest: PathBuf,
    pub image_map: PathBuf,
    pub embeddings: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub margin: f64,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub batch_size: usize,
    pub momentum: f64,
    pub d_out: usize,
    pub hidden: usize,
    pub activation: String,
    pub lookalikes: usize,
    pub split_fraction: f64,
    pub twin_top_fraction: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            margin: 0.5,
            epochs: 4,
            steps_per_epoch: 200,
            batch_size: 32,
            momentum: 0.0,
            d_out: 64,
            hidden: 0,
            activation: "tanh".into(),
            lookalikes: 10,
            split_fraction: 0.8,
            twin_top_fraction: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatchSection {
    pub score: String,
    pub metric: String,
    pub inversion: String,
    pub filter: String,
    pub retain_at: String,
    pub block_size: usize,
    pub bins: usize,
}

impl Default for MatchSection {
    fn default() -> Self {
        Self {
            score: "comparison".into(),
            metric: "cosine_mapped".into(),
            inversion: "batch_relative".into(),
            filter: "nonmated".into(),
            retain_at: "T".into(),
            block_size: 64,
            bins: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub fmr_target: f64,
    pub normalization: String,
    pub sweep: Vec<f64>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            fmr_target: 1e-3,
            normalization: "minmax".into(),
            sweep: Vec::new(),
        }
    }
}

impl RunConfig {
    /// Parse `text`; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).context("invalid configuration")?;
        cfg.base = base.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config `{}`", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).with_context(|| format!("in config `{}`", path.display()))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base.join(p)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.out_dir)
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            bail!("workers must be at least 1");
        }
        if !matches!(self.matching.score.as_str(), "comparison" | "similarity") {
            bail!("match.score must be `comparison` or `similarity`");
        }
        if !matches!(self.matching.inversion.as_str(), "batch_relative" | "calibrated") {
            bail!("match.inversion must be `batch_relative` or `calibrated`");
        }
        if !matches!(self.matching.filter.as_str(), "mated" | "nonmated" | "all") {
            bail!("match.filter must be `mated`, `nonmated` or `all`");
        }
        if self.matching.retain_at != "T" && self.matching.retain_at.parse::<f64>().is_err() {
            bail!("match.retain_at must be `T` or a number");
        }
        self.matching
            .metric
            .parse::<lookalike_core::scoring::ComparisonMetric>()
            .context("match.metric")?;
        self.analysis
            .normalization
            .parse::<lookalike_core::analysis::Normalization>()
            .context("analysis.normalization")?;
        if !matches!(self.train.activation.as_str(), "identity" | "tanh") {
            bail!("train.activation must be `identity` or `tanh`");
        }
        if !(self.analysis.fmr_target > 0.0 && self.analysis.fmr_target < 1.0) {
            bail!("analysis.fmr_target must lie in (0, 1)");
        }
        Ok(())
    }

    /// Replace the seed from the environment when set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .with_context(|| format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the effective configuration,
    /// with paths as written.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}
