//! Class likelihoods from Mahalanobis projections: the in-class complement
//! CDF over the out-of-class CDF, normalized across classes.

use serde::{Deserialize, Serialize};

/// Standard normal CDF via erfc; accurate in both tails.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Complement 1 - Phi(z), computed without cancellation.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Floor applied to the out-of-class CDF denominator.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// Gaussian mean/std of Mahalanobis projections for one class, over in-class
/// and out-of-class training samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionStats {
    pub mu_in: f64,
    pub sigma_in: f64,
    pub mu_out: f64,
    pub sigma_out: f64,
}

impl ProjectionStats {
    /// Unnormalized class score F(c|x) for a Mahalanobis distance d.
    pub fn score(&self, d: f64) -> f64 {
        let num = normal_sf((d - self.mu_in) / self.sigma_in);
        let den = normal_cdf((d - self.mu_out) / self.sigma_out).max(DENOMINATOR_FLOOR);
        num / den
    }
}

/// Per-class normalized likelihoods: non-negative, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodVector(Vec<f64>);

impl LikelihoodVector {
    /// Normalize raw scores. An all-zero score vector (every class deep in
    /// the tails) falls back to uniform.
    pub fn from_scores(scores: Vec<f64>) -> Self {
        let total: f64 = scores.iter().sum();
        if total > 0.0 && total.is_finite() {
            LikelihoodVector(scores.into_iter().map(|s| s / total).collect())
        } else {
            let n = scores.len();
            LikelihoodVector(vec![1.0 / n as f64; n])
        }
    }

    pub fn uniform(n: usize) -> Self {
        LikelihoodVector(vec![1.0 / n as f64; n])
    }

    /// Arithmetic mean of per-member vectors.
    pub fn mean_of(members: &[LikelihoodVector]) -> Self {
        assert!(!members.is_empty());
        let n = members[0].0.len();
        let mut acc = vec![0.0; n];
        for m in members {
            for (a, &v) in acc.iter_mut().zip(&m.0) {
                *a += v;
            }
        }
        let k = members.len() as f64;
        LikelihoodVector(acc.into_iter().map(|v| v / k).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Highest-likelihood class, ties to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.0.iter().enumerate() {
            if v > self.0[best] {
                best = i;
            }
        }
        best
    }
}
