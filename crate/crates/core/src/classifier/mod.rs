//! Bagged multi-class LDA ensemble producing per-frame normalized class
//! likelihoods from the in-class / out-of-class Mahalanobis-CDF ratio.

pub mod ensemble;
pub mod io;
pub mod lda;
pub mod likelihood;

pub use ensemble::{bagging_train, LdaEnsemble, TrainingData};
pub use io::{load_ensemble, save_ensemble, StoredEnsemble};
pub use lda::{fit_bag, fit_projection_stats, BagLda, LdaClassModel};
pub use likelihood::{normal_cdf, normal_sf, LikelihoodVector, ProjectionStats};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceMode {
    /// Classic LDA: pooled within-class covariance shared across classes.
    Pooled,
    /// QDA-style per-class covariance, for fidelity experiments.
    PerClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapUnit {
    Frame,
    Utterance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub n_bags: usize,
    pub bootstrap: bool,
    pub bootstrap_unit: BootstrapUnit,
    pub covariance: CovarianceMode,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            n_bags: 100,
            bootstrap: true,
            bootstrap_unit: BootstrapUnit::Frame,
            covariance: CovarianceMode::Pooled,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bags == 0 {
            return Err(Error::Classifier("n_bags must be >= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_100_pooled_frame_bags() {
        let cfg = ClassifierConfig::default();
        assert_eq!(cfg.n_bags, 100);
        assert!(cfg.bootstrap);
        assert_eq!(cfg.bootstrap_unit, BootstrapUnit::Frame);
        assert_eq!(cfg.covariance, CovarianceMode::Pooled);
        assert!(ClassifierConfig { n_bags: 0, ..cfg }.validate().is_err());
    }
}
