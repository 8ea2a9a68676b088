use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use lookalike_core::datamodel::{load_dataset, Dataset};

use crate::config::RunConfig;
use crate::provenance::Provenance;
use crate::ScoreArg;

/// Bad invocation or configuration; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub struct Ctx {
    pub cfg: RunConfig,
    pub prov: Provenance,
}

pub struct DataPaths {
    pub manifest: PathBuf,
    pub image_map: PathBuf,
    pub embeddings: PathBuf,
}

impl Ctx {
    pub fn new(cfg: RunConfig) -> Self {
        let prov = Provenance {
            config_hash: cfg.hash(),
            seed: cfg.seed,
        };
        Self { cfg, prov }
    }

    pub fn out(&self, rel: &str) -> PathBuf {
        self.cfg.out_dir().join(rel)
    }

    pub fn data_dir(&self) -> PathBuf {
        self.out("data")
    }

    pub fn train_dir(&self) -> PathBuf {
        self.out("train")
    }

    pub fn match_dir(&self, score: ScoreArg) -> PathBuf {
        self.out("match").join(score.as_str())
    }

    pub fn analysis_dir(&self) -> PathBuf {
        self.out("analysis")
    }

    pub fn default_score(&self) -> ScoreArg {
        ScoreArg::parse(&self.cfg.matching.score).expect("validated")
    }

    /// Dataset inputs: the `[data]` section, else the synth outputs.
    pub fn data_paths(&self) -> DataPaths {
        match &self.cfg.data {
            Some(d) => DataPaths {
                manifest: self.cfg.resolve(&d.manifest),
                image_map: self.cfg.resolve(&d.image_map),
                embeddings: self.cfg.resolve(&d.embeddings),
            },
            None => DataPaths {
                manifest: self.data_dir().join("manifest.csv"),
                image_map: self.data_dir().join("images.csv"),
                embeddings: self.data_dir().join("embeddings.emb"),
            },
        }
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        let p = self.data_paths();
        require(&[&p.manifest, &p.image_map, &p.embeddings])?;
        Ok(load_dataset(&p.manifest, &p.image_map, &p.embeddings)?)
    }
}

/// Fail naming the first path that does not exist.
pub fn require(paths: &[&Path]) -> Result<()> {
    for p in paths {
        if !p.is_file() {
            bail!("missing input file `{}`", p.display());
        }
    }
    Ok(())
}
