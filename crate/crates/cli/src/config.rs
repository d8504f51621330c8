//! Run configuration: one JSON object with flat namespaced keys such as
//! `"train.phase1_epochs"`. Missing keys keep their defaults; unknown keys
//! are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use serde_json::{Map, Value};

use spantag::bio_codec::EncodingPolicy;
use spantag::tagger::{FeatureConfig, TrainConfig, TrainSetup};
use spantag::textnorm::NormalizationConfig;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub telemetry: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScorerConfig {
    pub include_absent_techniques: bool,
    /// Techniques the macro average and confusion matrix always cover.
    pub catalog: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub norm: NormalizationConfig,
    pub encoding: EncodingPolicy,
    pub features: FeatureConfig,
    pub train: TrainConfig,
    pub scorer: ScorerConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&raw).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn parse(raw: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(raw)?;
        let Value::Object(flat) = value else {
            bail!("config must be a JSON object");
        };
        let mut nested = Map::new();
        for (key, value) in flat {
            let Some((namespace, field)) = key.split_once('.') else {
                bail!("config key {key:?} is not of the form \"section.name\"");
            };
            let section = nested
                .entry(namespace.to_string())
                .or_insert_with(|| Value::Object(Map::new()));
            section
                .as_object_mut()
                .expect("sections are objects")
                .insert(field.to_string(), value);
        }
        let config: RunConfig = serde_json::from_value(Value::Object(nested))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.features.validate().map_err(anyhow::Error::msg)?;
        self.train.validate().map_err(anyhow::Error::msg)?;
        if self.encoding.min_overlap_chars == 0 {
            bail!("encoding.min_overlap_chars must be at least 1");
        }
        Ok(())
    }

    /// `--seed` drives both the shuffle order and the feature hash.
    pub fn apply_seed(&mut self, seed: u64) {
        self.train.shuffle_seed = seed;
        self.features.seed = seed;
    }

    pub fn setup(&self) -> TrainSetup {
        TrainSetup {
            normalization: self.norm,
            encoding: self.encoding,
            features: self.features.clone(),
            train: self.train.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        assert_eq!(RunConfig::parse("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn flat_keys_reach_their_sections() {
        let c = RunConfig::parse(
            r#"{"train.phase1_epochs": 3, "features.hash_dim": 1024, "paths.model": "m.bin",
                "norm.unify_alef": true, "encoding.overlap_resolution": "first_start_wins",
                "scorer.include_absent_techniques": true}"#,
        )
        .unwrap();
        assert_eq!(c.train.phase1_epochs, 3);
        assert_eq!(c.train.phase2_epochs, TrainConfig::default().phase2_epochs);
        assert_eq!(c.features.hash_dim, 1024);
        assert_eq!(c.paths.model.as_deref(), Some(Path::new("m.bin")));
        assert!(c.norm.unify_alef);
        assert!(c.scorer.include_absent_techniques);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse(r#"{"train.phase1_epoch": 3}"#).is_err());
        assert!(RunConfig::parse(r#"{"trian.phase1_epochs": 3}"#).is_err());
        assert!(RunConfig::parse(r#"{"seed": 3}"#).is_err());
        assert!(RunConfig::parse("[]").is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(RunConfig::parse(r#"{"features.hash_dim": 0}"#).is_err());
        assert!(RunConfig::parse(r#"{"encoding.min_overlap_chars": 0}"#).is_err());
        assert!(RunConfig::parse(r#"{"train.phase1_epochs": -1}"#).is_err());
    }

    #[test]
    fn seed_sets_both_seeds() {
        let mut c = RunConfig::default();
        c.apply_seed(9);
        assert_eq!((c.train.shuffle_seed, c.features.seed), (9, 9));
    }
}
