//! Staged experiment runner: synthetic data, corruption, autoencoder training, enhancement,
//! features, back-end training, i-vectors, scoring and the EER report.

pub mod config;
pub mod manifest;
pub mod regime;
mod stages;

pub use config::{
    AutoencoderConfig, BackendConfig, CorpusConfig, CorruptionConfig, ExperimentConfig, FeatureConfig, GeneralConfig,
    PoolConfig, RegimeConfig,
};
pub use manifest::{check_provenance, FileHash, Manifest, Provenance, UpstreamLink};
pub use regime::{Mix, System};

use std::cell::RefCell;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::json;

use crate::error::{Error, Result};
use crate::util::sha256_hex;

/// Copy of the active configuration written to the work directory root.
pub const CONFIG_SNAPSHOT: &str = "config.toml";
pub const REPORT_FILE: &str = "report/eer_table.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    SynthData,
    Corrupt,
    TrainAe,
    Enhance,
    Features,
    TrainBackend,
    Ivectors,
    Score,
    Eer,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::SynthData,
        Stage::Corrupt,
        Stage::TrainAe,
        Stage::Enhance,
        Stage::Features,
        Stage::TrainBackend,
        Stage::Ivectors,
        Stage::Score,
        Stage::Eer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::SynthData => "synth-data",
            Stage::Corrupt => "corrupt",
            Stage::TrainAe => "train-ae",
            Stage::Enhance => "enhance",
            Stage::Features => "features",
            Stage::TrainBackend => "train-backend",
            Stage::Ivectors => "ivectors",
            Stage::Score => "score",
            Stage::Eer => "eer",
        }
    }

    /// Output directory below the work directory; also the stage key in manifests.
    pub fn dir(self) -> &'static str {
        match self {
            Stage::SynthData => "data",
            Stage::Corrupt => "corrupt",
            Stage::TrainAe => "ae",
            Stage::Enhance => "enhance",
            Stage::Features => "features",
            Stage::TrainBackend => "backend",
            Stage::Ivectors => "ivectors",
            Stage::Score => "scores",
            Stage::Eer => "report",
        }
    }

    pub fn upstream(self) -> &'static [Stage] {
        use Stage::*;
        match self {
            SynthData => &[],
            Corrupt => &[SynthData],
            TrainAe => &[SynthData, Corrupt],
            Enhance => &[SynthData, Corrupt, TrainAe],
            Features => &[SynthData, Corrupt, Enhance],
            TrainBackend => &[SynthData, Corrupt, Features],
            Ivectors => &[Features, TrainBackend],
            Score => &[Corrupt, TrainBackend, Ivectors],
            Eer => &[Score],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageOutcome {
    Ran,
    /// Inputs, configuration and outputs matched the existing manifest.
    UpToDate,
}

pub struct Experiment {
    pub config: ExperimentConfig,
    pub systems: Vec<System>,
}

/// Per-run bookkeeping of the files a stage reads.
pub(crate) struct StageCtx<'a> {
    pub exp: &'a Experiment,
    inputs: RefCell<Vec<FileHash>>,
}

impl StageCtx<'_> {
    pub fn work(&self) -> &Path {
        &self.exp.config.general.work_dir
    }

    /// Path of an upstream file, recorded (with its hash) as an input of this stage.
    pub fn input(&self, rel: &str) -> Result<PathBuf> {
        let p = self.work().join(rel);
        if !p.exists() {
            return Err(Error::StaleManifest(format!("expected input {rel} is missing")));
        }
        let sha256 = manifest::hash_file(&p)?;
        let mut inputs = self.inputs.borrow_mut();
        if !inputs.iter().any(|f| f.path == rel) {
            inputs.push(FileHash {
                path: rel.to_string(),
                sha256,
            });
        }
        Ok(p)
    }

    pub fn output(&self, rel: &str) -> Result<PathBuf> {
        let p = self.work().join(rel);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        Ok(p)
    }
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let systems = config.systems()?;
        Ok(Self { config, systems })
    }

    pub fn work_dir(&self) -> &Path {
        &self.config.general.work_dir
    }

    fn stage_config(&self, stage: Stage) -> serde_json::Value {
        let c = &self.config;
        let seed = c.general.seed;
        let regimes = &c.regimes;
        match stage {
            Stage::SynthData => json!({"seed": seed, "sample_rate": c.general.sample_rate, "corpus": c.corpus, "pools": c.pools}),
            Stage::Corrupt => json!({"seed": seed, "corruption": c.corruption, "regimes": regimes}),
            Stage::TrainAe => json!({"seed": seed, "autoencoder": c.autoencoder, "vad": c.corruption.vad, "regimes": regimes}),
            Stage::Enhance => json!({"geometry": c.autoencoder.geometry, "regimes": regimes}),
            Stage::Features => json!({"features": c.features, "vad": c.corruption.vad, "regimes": regimes}),
            Stage::TrainBackend => json!({"seed": seed, "backend": c.backend, "regimes": regimes}),
            Stage::Ivectors | Stage::Score | Stage::Eer => json!({"regimes": regimes}),
        }
    }

    /// Runs one stage after validating its upstream manifests; a no-op when nothing changed.
    pub fn run_stage(&self, stage: Stage) -> Result<StageOutcome> {
        let work = self.work_dir();
        let mut upstream = Vec::new();
        for &u in stage.upstream() {
            let (m, hash) = Manifest::load(work, u.dir())?.ok_or_else(|| {
                Error::StaleManifest(format!("stage {stage} needs {u}, which has not been run"))
            })?;
            m.verify_outputs(work)?;
            upstream.push(UpstreamLink {
                stage: u.dir().to_string(),
                manifest_sha256: hash,
            });
        }
        let config = self.stage_config(stage);
        let config_hash = sha256_hex(config.to_string().as_bytes());
        if let Some((old, _)) = Manifest::load(work, stage.dir())? {
            if old.config_hash == config_hash && old.upstream == upstream && old.verify_outputs(work).is_ok() {
                log::info!("{stage}: up to date");
                return Ok(StageOutcome::UpToDate);
            }
        }
        let dir = work.join(stage.dir());
        if dir.exists() {
            std::fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let snapshot = work.join(CONFIG_SNAPSHOT);
        std::fs::write(&snapshot, self.config.to_toml()).map_err(|e| Error::io(&snapshot, e))?;
        let ctx = StageCtx {
            exp: self,
            inputs: RefCell::new(Vec::new()),
        };
        log::info!("{stage}: running");
        stages::run(&ctx, stage)?;
        let mut inputs = ctx.inputs.into_inner();
        inputs.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            stage: stage.dir().to_string(),
            config_hash,
            seed: self.config.general.seed,
            config,
            upstream,
            inputs,
            outputs: manifest::hash_outputs(work, stage.dir())?,
        };
        manifest.save(work)?;
        Ok(StageOutcome::Ran)
    }

    /// Every stage in dependency order.
    pub fn run_all(&self) -> Result<Vec<(Stage, StageOutcome)>> {
        Stage::ALL
            .into_iter()
            .map(|s| Ok((s, self.run_stage(s)?)))
            .collect()
    }

    pub fn report(&self) -> Result<String> {
        let p = self.work_dir().join(REPORT_FILE);
        std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))
    }
}

/// Runs the whole regime matrix and returns the rendered EER table.
pub fn run_experiment(config: ExperimentConfig) -> Result<String> {
    let exp = Experiment::new(config)?;
    exp.run_all()?;
    exp.report()
}
