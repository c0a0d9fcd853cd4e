//! Experiment configuration: a UTF-8 TOML file with data paths, feature and
//! classifier settings, and decode options.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::ClassifierConfig;
use crate::corpus::SyntheticSpec;
use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::util::fnv1a64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct DataConfig {
    /// Training corpus manifest.
    pub corpus: PathBuf,
    /// Held-out corpus manifest; when absent, `train_per_speaker` splits
    /// `corpus` by speaker instead.
    pub test_corpus: Option<PathBuf>,
    pub train_per_speaker: Option<usize>,
    pub lexicon: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeConfig {
    /// Vocabulary lengths for `sweep-vocab`.
    pub vocab_lengths: Vec<usize>,
    /// Ranks for the rank-sweep mode of `evaluate`.
    pub ranks: Vec<usize>,
    /// Default decode mode; `--rank`/`--baseline` override.
    pub rank: usize,
    pub baseline: bool,
    pub word_penalty: f64,
    pub retrain_each_step: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            vocab_lengths: vec![28, 23, 20, 16, 14],
            ranks: vec![1, 2, 4, 8],
            rank: 0, // 0 = full rank (all classes)
            baseline: false,
            word_penalty: 0.5,
            retrain_each_step: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Output directory for all artifacts.
    pub output: PathBuf,
    pub data: DataConfig,
    pub features: FeatureConfig,
    pub classifier: ClassifierConfig,
    pub decode: DecodeConfig,
    /// Used by the `synth` subcommand.
    pub synthetic: Option<SyntheticSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            output: PathBuf::from("out"),
            data: DataConfig::default(),
            features: FeatureConfig::default(),
            classifier: ClassifierConfig::default(),
            decode: DecodeConfig::default(),
            synthetic: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: ExperimentConfig =
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        // Relative paths resolve against the config file's directory.
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        rebase(&mut config.output);
        rebase(&mut config.data.corpus);
        if let Some(p) = config.data.test_corpus.as_mut() {
            rebase(p);
        }
        if let Some(p) = config.data.lexicon.as_mut() {
            rebase(p);
        }
        config.features.validate()?;
        config.classifier.validate()?;
        Ok(config)
    }

    /// Stable fingerprint over the experiment settings (paths excluded, so
    /// relocating a run does not invalidate caches).
    pub fn config_hash(&self) -> u64 {
        #[derive(Serialize)]
        struct Hashed<'a> {
            seed: u64,
            features: &'a FeatureConfig,
            classifier: &'a ClassifierConfig,
            decode: &'a DecodeConfig,
        }
        let bytes = serde_json::to_vec(&Hashed {
            seed: self.seed,
            features: &self.features,
            classifier: &self.classifier,
            decode: &self.decode,
        })
        .expect("config serialization cannot fail");
        fnv1a64(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_toml_parses_with_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(
            &path,
            r#"
seed = 7
output = "out"

[data]
corpus = "corpus/manifest.json"

[features]
streams = ["dct_spatial"]
dct_coeffs = 32

[classifier]
n_bags = 5
"#,
        )
        .unwrap();
        let cfg = ExperimentConfig::load(&path).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.classifier.n_bags, 5);
        assert_eq!(cfg.features.dct_coeffs, 32);
        assert!(cfg.output.starts_with(dir.path()));
        assert_eq!(cfg.decode.word_penalty, 0.5);
    }

    #[test]
    fn config_hash_tracks_settings_not_paths() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.output = PathBuf::from("elsewhere");
        assert_eq!(a.config_hash(), b.config_hash());
        let mut c = a.clone();
        c.seed = 99;
        assert_ne!(a.config_hash(), c.config_hash());
    }

    #[test]
    fn bad_feature_section_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(
            &path,
            r#"
[data]
corpus = "x.json"

[features]
streams = []
"#,
        )
        .unwrap();
        assert!(ExperimentConfig::load(&path).is_err());
    }
}
