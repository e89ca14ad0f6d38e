use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::regime::System;
use crate::corpus::{CorpusSpec, PoolSpec};
use crate::corruption::ReverbSource;
use crate::enhancement::TrainConfig;
use crate::error::{Error, Result};
use crate::features::MfccConfig;
use crate::signal::FrameGeometry;
use crate::vad::VadConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneralConfig {
    pub seed: u64,
    pub work_dir: PathBuf,
    pub sample_rate: u32,
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
}

impl Default for GeneralConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            work_dir: PathBuf::from("work"),
            sample_rate: 8000,
            jobs: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    /// Speakers for UBM, total-variability, LDA and PLDA training.
    #[serde(deserialize_with = "backend_spec")]
    pub backend: CorpusSpec,
    /// Evaluation speakers, disjoint from the back end.
    #[serde(deserialize_with = "eval_spec")]
    pub eval: CorpusSpec,
    /// Speakers whose parallel clean/corrupted audio trains the autoencoder.
    #[serde(deserialize_with = "autoencoder_spec")]
    pub autoencoder: CorpusSpec,
}

/// Overlays a partial `[corpus.<role>]` table on that role's defaults.
fn overlay_spec<'de, D: serde::Deserializer<'de>>(d: D, base: CorpusSpec) -> std::result::Result<CorpusSpec, D::Error> {
    use serde::de::Error as _;
    let table = serde_json::Map::<String, serde_json::Value>::deserialize(d)?;
    let mut merged = serde_json::to_value(base).map_err(D::Error::custom)?;
    if let Some(m) = merged.as_object_mut() {
        m.extend(table);
    }
    serde_json::from_value(merged).map_err(D::Error::custom)
}

fn backend_spec<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<CorpusSpec, D::Error> {
    overlay_spec(d, CorpusConfig::default().backend)
}

fn eval_spec<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<CorpusSpec, D::Error> {
    overlay_spec(d, CorpusConfig::default().eval)
}

fn autoencoder_spec<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<CorpusSpec, D::Error> {
    overlay_spec(d, CorpusConfig::default().autoencoder)
}

impl Default for CorpusConfig {
    fn default() -> Self {
        let spec = |prefix: &str, speakers, utts, (min_duration_s, max_duration_s)| CorpusSpec {
            prefix: prefix.into(),
            speakers,
            utterances_per_speaker: utts,
            min_duration_s,
            max_duration_s,
        };
        Self {
            backend: spec("bk", 120, 8, (3.0, 5.0)),
            eval: spec("ev", 60, 8, (3.0, 5.0)),
            autoencoder: spec("ae", 30, 6, (2.0, 3.0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoolConfig {
    #[serde(flatten)]
    pub spec: PoolSpec,
    /// Directory with `noises.txt` and WAVs replacing the synthetic noise pool.
    pub noise_dir: Option<PathBuf>,
    /// Directory with `rirs.txt` and WAV pairs replacing the synthetic measured-style pool.
    pub real_rir_dir: Option<PathBuf>,
    /// Directory with `train.txt`, `dev.txt` and `test.txt` room manifests replacing the
    /// random artificial rooms.
    pub artificial_rooms: Option<PathBuf>,
}

impl Default for PoolConfig {
    fn default() -> Self {
        Self {
            spec: PoolSpec::default(),
            noise_dir: None,
            real_rir_dir: None,
            artificial_rooms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorruptionConfig {
    /// SNR range for autoencoder and multi-condition training copies.
    pub training_snr_db: (f64, f64),
    /// Corrupted copies added to the PLDA list, as a fraction of the clean utterances.
    pub mc_fraction: f64,
    /// Corrupted copies per autoencoder utterance.
    pub ae_copies: usize,
    pub eval_reverb: ReverbSource,
    pub vad: VadConfig,
}

impl Default for CorruptionConfig {
    fn default() -> Self {
        Self {
            training_snr_db: (0.0, 21.0),
            mc_fraction: 0.3,
            ae_copies: 2,
            eval_reverb: ReverbSource::RealPool,
            vad: VadConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutoencoderConfig {
    pub context: usize,
    /// Clean-to-clean utterances added to the training pairs, relative to the clean set size.
    pub clean_fraction: f64,
    pub geometry: FrameGeometry,
    pub train: TrainConfig,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        Self {
            context: 15,
            clean_fraction: 1.0,
            geometry: FrameGeometry::default(),
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub mfcc: MfccConfig,
    pub stmvn_window_s: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            mfcc: MfccConfig::default(),
            stmvn_window_s: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub ubm_components: usize,
    pub ubm_iters: usize,
    pub ivector_dim: usize,
    pub tv_iters: usize,
    pub lda_dim: usize,
    pub plda_iters: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            ubm_components: 64,
            ubm_iters: 20,
            ivector_dim: 50,
            tv_iters: 10,
            lda_dim: 20,
            plda_iters: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegimeConfig {
    /// Report columns, e.g. `baseline`, `AE(N+RR)`, `MC(N+RR)`, `AE+MC(N+RR)`.
    pub systems: Vec<String>,
}

impl Default for RegimeConfig {
    fn default() -> Self {
        Self {
            systems: ["baseline", "AE(N+RR)", "MC(N+RR)", "AE+MC(N+RR)"]
                .map(String::from)
                .to_vec(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub general: GeneralConfig,
    pub corpus: CorpusConfig,
    pub pools: PoolConfig,
    pub corruption: CorruptionConfig,
    pub autoencoder: AutoencoderConfig,
    pub features: FeatureConfig,
    pub backend: BackendConfig,
    pub regimes: RegimeConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn systems(&self) -> Result<Vec<System>> {
        self.regimes.systems.iter().map(|s| s.parse()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.general.sample_rate != 8000 {
            return err(format!("sample_rate {} unsupported; the telephone channel needs 8000", self.general.sample_rate));
        }
        let systems = self.systems()?;
        if systems.is_empty() {
            return err("regimes.systems is empty".into());
        }
        let mut names: Vec<String> = systems.iter().map(|s| s.to_string()).collect();
        names.sort();
        names.dedup();
        if names.len() != systems.len() {
            return err("regimes.systems lists a system twice".into());
        }
        let (lo, hi) = self.corruption.training_snr_db;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return err(format!("training_snr_db ({lo}, {hi}) is not a range"));
        }
        if !(0.0..=1.0).contains(&self.corruption.mc_fraction) {
            return err("mc_fraction must lie in [0, 1]".into());
        }
        if !(self.autoencoder.clean_fraction >= 0.0) {
            return err("clean_fraction must be non-negative".into());
        }
        self.autoencoder.geometry.validate().map_err(|e| Error::Config(e.to_string()))?;
        let b = &self.backend;
        if b.ubm_components == 0 || b.ivector_dim == 0 || b.lda_dim == 0 {
            return err("back-end dimensions must be positive".into());
        }
        if b.lda_dim > b.ivector_dim {
            return err(format!("lda_dim {} exceeds ivector_dim {}", b.lda_dim, b.ivector_dim));
        }
        if b.ivector_dim > b.ubm_components * 3 * self.features.mfcc.n_ceps {
            return err("ivector_dim exceeds the supervector dimension".into());
        }
        if b.lda_dim >= self.corpus.backend.speakers {
            return err(format!(
                "lda_dim {} needs more than {} back-end speakers",
                b.lda_dim, b.lda_dim
            ));
        }
        for (name, spec) in [
            ("backend", &self.corpus.backend),
            ("eval", &self.corpus.eval),
            ("autoencoder", &self.corpus.autoencoder),
        ] {
            if spec.speakers == 0 || spec.utterances_per_speaker == 0 {
                return err(format!("corpus.{name} is empty"));
            }
        }
        let prefixes = [&self.corpus.backend.prefix, &self.corpus.eval.prefix, &self.corpus.autoencoder.prefix];
        for i in 0..3 {
            for j in i + 1..3 {
                if prefixes[i].starts_with(prefixes[j].as_str()) || prefixes[j].starts_with(prefixes[i].as_str()) {
                    return err("corpus prefixes must not be prefixes of one another".into());
                }
            }
        }
        if self.corpus.eval.utterances_per_speaker < 2 {
            return err("evaluation needs at least two utterances per speaker".into());
        }
        for p in [&self.pools.noise_dir, &self.pools.real_rir_dir, &self.pools.artificial_rooms]
            .into_iter()
            .flatten()
        {
            if !p.exists() {
                return err(format!("path {} does not exist", p.display()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
        assert!(text.contains("[backend]"));
    }

    #[test]
    fn partial_file_takes_defaults() {
        let cfg = ExperimentConfig::from_toml("[backend]\nubm_components = 8\n").unwrap();
        assert_eq!(cfg.backend.ubm_components, 8);
        assert_eq!(cfg.backend.ivector_dim, 50);
        let cfg = ExperimentConfig::from_toml("[corpus.eval]\nspeakers = 5\n").unwrap();
        assert_eq!(cfg.corpus.eval.speakers, 5);
        assert_eq!(cfg.corpus.eval.prefix, CorpusConfig::default().eval.prefix);
        assert_eq!(cfg.corpus.backend, CorpusConfig::default().backend);
    }

    #[test]
    fn bad_values_are_config_errors() {
        for text in [
            "[regimes]\nsystems = [\"bogus\"]\n",
            "[general]\nsample_rate = 16000\n",
            "[backend]\nlda_dim = 60\n",
            "[nonsense]\nx = 1\n",
            "[corpus.eval]\nspeaker = 5\n",
            "[pools]\nnoize_dir = \"x\"\n",
            "[pools]\nnoise_dir = \"/definitely/missing\"\n",
        ] {
            assert!(matches!(ExperimentConfig::from_toml(text), Err(Error::Config(_))), "{text}");
        }
    }
}
