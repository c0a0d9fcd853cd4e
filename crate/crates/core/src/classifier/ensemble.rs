//! Bagged LDA ensemble: bootstrap resampling, averaged normalized
//! likelihoods, argmax classification.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::lda::{fit_bag, BagLda};
use crate::classifier::likelihood::LikelihoodVector;
use crate::classifier::{BootstrapUnit, ClassifierConfig};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::util::mix_seed;

/// Frame-level training data with optional utterance boundaries (needed for
/// utterance-level bootstrap).
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub class_count: usize,
    /// (start, len) frame spans per utterance, covering features exactly.
    pub utterance_spans: Vec<(usize, usize)>,
}

impl TrainingData {
    pub fn from_frames(
        features: Vec<FeatureVector>,
        labels: Vec<usize>,
        class_count: usize,
    ) -> Self {
        let n = features.len();
        TrainingData {
            features: features.into_iter().map(|f| f.values).collect(),
            labels,
            class_count,
            utterance_spans: vec![(0, n)],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Classifier("empty training set".into()));
        }
        if self.features.len() != self.labels.len() {
            return Err(Error::Classifier("label/feature length mismatch".into()));
        }
        if self.labels.iter().any(|&l| l >= self.class_count) {
            return Err(Error::Classifier("label out of class range".into()));
        }
        let covered: usize = self.utterance_spans.iter().map(|&(_, l)| l).sum();
        if covered != self.features.len() {
            return Err(Error::Classifier(
                "utterance spans do not cover the training frames".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaEnsemble {
    pub config: ClassifierConfig,
    pub class_count: usize,
    pub dim: usize,
    pub bags: Vec<BagLda>,
    pub bag_seeds: Vec<u64>,
}

/// Train a bagged ensemble: each bag is a bootstrap resample (with
/// replacement, same size as the training set) fitted independently.
/// Deterministic per (seed, bag index).
pub fn bagging_train(data: &TrainingData, config: &ClassifierConfig, seed: u64) -> Result<LdaEnsemble> {
    config.validate()?;
    data.validate()?;
    let n = data.features.len();
    let bag_seeds: Vec<u64> = (0..config.n_bags)
        .map(|b| mix_seed(seed, b as u64))
        .collect();

    let bags: Vec<BagLda> = bag_seeds
        .par_iter()
        .map(|&bag_seed| {
            let indices = if config.bootstrap {
                let mut rng = ChaCha8Rng::seed_from_u64(bag_seed);
                match config.bootstrap_unit {
                    BootstrapUnit::Frame => {
                        (0..n).map(|_| rng.random_range(0..n)).collect::<Vec<_>>()
                    }
                    BootstrapUnit::Utterance => {
                        let spans = &data.utterance_spans;
                        let mut idx = Vec::with_capacity(n);
                        for _ in 0..spans.len() {
                            let (start, len) = spans[rng.random_range(0..spans.len())];
                            idx.extend(start..start + len);
                        }
                        idx
                    }
                }
            } else {
                (0..n).collect()
            };
            fit_bag(
                &data.features,
                &data.labels,
                data.class_count,
                &indices,
                config.covariance,
            )
        })
        .collect::<Result<_>>()?;

    Ok(LdaEnsemble {
        config: config.clone(),
        class_count: data.class_count,
        dim: data.features[0].len(),
        bags,
        bag_seeds,
    })
}

impl LdaEnsemble {
    /// Mean of the members' normalized likelihood vectors.
    pub fn ensemble_likelihood(&self, x: &[f64]) -> Result<LikelihoodVector> {
        let members = self
            .bags
            .iter()
            .map(|b| b.class_likelihood(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(LikelihoodVector::mean_of(&members))
    }

    /// Class with the highest averaged likelihood; ties to the lowest index.
    pub fn classify(&self, x: &[f64]) -> Result<usize> {
        Ok(self.ensemble_likelihood(x)?.argmax())
    }

    /// Likelihood vectors for a whole utterance, parallel across frames.
    pub fn likelihoods(&self, frames: &[FeatureVector]) -> Result<Vec<LikelihoodVector>> {
        frames
            .par_iter()
            .map(|f| self.ensemble_likelihood(&f.values))
            .collect()
    }
}
