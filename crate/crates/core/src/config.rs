//! Pipeline configuration: one TOML file with top-level run settings and
//! `[aan]` / `[mtn]` tables. Missing keys take the published defaults and
//! unknown keys are rejected.
//!
//! A single master `seed` drives every stream. The AAN and per-fold MTN seeds
//! are derived from it, so the sub-table `seed` keys must stay unset.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aan::AanConfig;
use crate::data::Protocol;
use crate::error::{Error, IoContext, Result};
use crate::evaluation::Variant;
use crate::models::{GeneratorSpec, ModelScale, StNetSpec};
use crate::mtn::MtnConfig;
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub scale: ModelScale,
    pub protocol: Protocol,
    /// Cross-validation folds: 5 for DEAP, 10 for DREAMER.
    pub folds: usize,
    /// Share of samples used to train the AAN (and the FSTD extractors).
    pub aan_fraction: f64,
    pub classifier_dropout: f64,
    pub variant: Variant,
    pub aan: AanConfig,
    pub mtn: MtnConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            scale: ModelScale::Paper,
            protocol: Protocol::Valence,
            folds: 5,
            aan_fraction: 0.8,
            classifier_dropout: 0.5,
            variant: Variant::Full,
            aan: AanConfig::default(),
            mtn: MtnConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedSeeds {
    pub folds: u64,
    pub holdout: u64,
    pub aan: u64,
    pub mtn: Vec<u64>,
    pub extractor: u64,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!("folds must be at least 2, got {}", self.folds)));
        }
        if !(self.aan_fraction > 0.0 && self.aan_fraction <= 1.0) {
            return Err(Error::Config(format!("aan_fraction must lie in (0, 1], got {}", self.aan_fraction)));
        }
        if !(0.0..1.0).contains(&self.classifier_dropout) {
            return Err(Error::Config(format!("classifier_dropout must lie in [0, 1), got {}", self.classifier_dropout)));
        }
        if self.aan.seed != 0 || self.mtn.seed != 0 {
            return Err(Error::Config("set the master `seed`; [aan].seed and [mtn].seed are derived from it".into()));
        }
        self.aan.validate()?;
        self.mtn.validate()
    }

    pub fn derived_seeds(&self) -> DerivedSeeds {
        DerivedSeeds {
            folds: seed::derive(self.seed, "folds", 0),
            holdout: seed::derive(self.seed, "holdout", 0),
            aan: seed::derive(self.seed, "aan", 0),
            mtn: (0..self.folds).map(|k| seed::derive(self.seed, "mtn", k as u64)).collect(),
            extractor: seed::derive(self.seed, "extractor", 0),
        }
    }

    /// AAN settings with the derived seed filled in.
    pub fn aan_config(&self) -> AanConfig {
        AanConfig { seed: self.derived_seeds().aan, ..self.aan.clone() }
    }

    /// MTN settings for fold `k`, with the derived seed filled in.
    pub fn mtn_config(&self, fold: usize) -> MtnConfig {
        MtnConfig { seed: seed::derive(self.seed, "mtn", fold as u64), ..self.mtn.clone() }
    }

    /// The configuration with the variant's hyperparameter changes applied.
    pub fn effective(&self) -> PipelineConfig {
        self.variant.apply(self)
    }

    pub fn generator_spec(&self) -> GeneratorSpec {
        self.variant.generator_spec(self.scale.generator())
    }

    pub fn critic_spec(&self) -> StNetSpec {
        self.variant.stnet_spec(self.scale.stnet(1, 0.0)).discriminator()
    }

    pub fn classifier_spec(&self) -> StNetSpec {
        self.variant.stnet_spec(self.scale.stnet(self.protocol.n_classes(), self.classifier_dropout))
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

pub fn parse_config(text: &str) -> Result<PipelineConfig> {
    let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).at(path)?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}
