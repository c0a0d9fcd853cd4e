//! One multi-class LDA: class means, a regularized covariance metric, and
//! per-class Gaussian statistics of the Mahalanobis projections.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::classifier::likelihood::{LikelihoodVector, ProjectionStats};
use crate::classifier::CovarianceMode;
use crate::error::{Error, Result};

/// Shrinkage factor: covariance += (1e-6 * trace / dim) I.
const SHRINKAGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaClassModel {
    pub mean: Vec<f64>,
    /// Class mean in whitened coordinates (its own metric in per-class mode).
    pub whitened_mean: Vec<f64>,
    pub stats: ProjectionStats,
    /// Class was absent from the bag; mean taken from the full training set.
    pub borrowed_mean: bool,
    /// Fewer than 2 in-class bag samples; stats from the full training set.
    pub borrowed_stats: bool,
}

/// One fitted LDA (one bag): whitening factor(s) plus per-class models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BagLda {
    pub dim: usize,
    /// Row-major lower-triangular L^{-1} of the pooled covariance Cholesky.
    pub pooled_whitener: Option<Vec<f64>>,
    /// Per-class whiteners (covariance mode `PerClass`).
    pub class_whiteners: Option<Vec<Vec<f64>>>,
    pub classes: Vec<LdaClassModel>,
}

impl BagLda {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    fn whitener_for(&self, class: usize) -> &[f64] {
        match (&self.pooled_whitener, &self.class_whiteners) {
            (Some(w), _) => w,
            (None, Some(ws)) => &ws[class],
            _ => unreachable!("fitted model always has a whitener"),
        }
    }

    /// Mahalanobis distance of x to one class mean.
    pub fn mahalanobis(&self, x: &[f64], class: usize) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::Classifier(format!(
                "dimension mismatch: vector {} vs model {}",
                x.len(),
                self.dim
            )));
        }
        let w = self.whitener_for(class);
        let mut acc = 0.0;
        let mean = &self.classes[class].mean;
        let mut centered = vec![0.0; self.dim];
        for (c, (&xv, &mv)) in centered.iter_mut().zip(x.iter().zip(mean)) {
            *c = xv - mv;
        }
        for i in 0..self.dim {
            let row = &w[i * self.dim..i * self.dim + i + 1];
            let mut y = 0.0;
            for (j, &l) in row.iter().enumerate() {
                y += l * centered[j];
            }
            acc += y * y;
        }
        Ok(acc.sqrt())
    }

    /// Distances to every class. The pooled path whitens x once and reuses
    /// the pre-whitened class means.
    pub fn distances(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::Classifier(format!(
                "dimension mismatch: vector {} vs model {}",
                x.len(),
                self.dim
            )));
        }
        if let Some(w) = &self.pooled_whitener {
            let y = whiten(w, x, self.dim);
            Ok(self
                .classes
                .iter()
                .map(|c| {
                    y.iter()
                        .zip(&c.whitened_mean)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect())
        } else {
            (0..self.class_count())
                .map(|c| self.mahalanobis(x, c))
                .collect()
        }
    }

    /// Per-class CDF-ratio scores normalized to sum to one.
    pub fn class_likelihood(&self, x: &[f64]) -> Result<LikelihoodVector> {
        let d = self.distances(x)?;
        let scores = self
            .classes
            .iter()
            .zip(&d)
            .map(|(c, &dist)| c.stats.score(dist))
            .collect();
        Ok(LikelihoodVector::from_scores(scores))
    }
}

pub(crate) fn whiten(w: &[f64], x: &[f64], dim: usize) -> Vec<f64> {
    let mut y = vec![0.0; dim];
    for i in 0..dim {
        let row = &w[i * dim..i * dim + i + 1];
        let mut acc = 0.0;
        for (j, &l) in row.iter().enumerate() {
            acc += l * x[j];
        }
        y[i] = acc;
    }
    y
}

/// Invert a lower-triangular matrix by forward substitution.
fn invert_lower_triangular(l: &DMatrix<f64>) -> Vec<f64> {
    let n = l.nrows();
    let mut inv = vec![0.0; n * n];
    for col in 0..n {
        inv[col * n + col] = 1.0 / l[(col, col)];
        for i in col + 1..n {
            let mut acc = 0.0;
            for j in col..i {
                acc += l[(i, j)] * inv[j * n + col];
            }
            inv[i * n + col] = -acc / l[(i, i)];
        }
    }
    inv
}

/// Regularize and factorize a scatter matrix: returns the whitener L^{-1}
/// with cov = L L^T after shrinkage.
fn whitener_from_scatter(mut cov: DMatrix<f64>) -> Result<Vec<f64>> {
    let dim = cov.nrows();
    let trace: f64 = (0..dim).map(|i| cov[(i, i)]).sum();
    let gamma = (SHRINKAGE * trace / dim as f64).max(1e-12);
    for i in 0..dim {
        cov[(i, i)] += gamma;
    }
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::Classifier("covariance not positive definite".into()))?;
    Ok(invert_lower_triangular(&chol.l()))
}

/// Sample mean and (n-1)-denominator standard deviation, two-pass.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.max(0.0).sqrt().max(1e-12))
}

/// Fit one LDA on the sample multiset `indices` drawn from (features,
/// labels). Classes absent from the sample, or with too few samples for
/// projection statistics, fall back to the full training set and are
/// flagged.
pub fn fit_bag(
    features: &[Vec<f64>],
    labels: &[usize],
    class_count: usize,
    indices: &[usize],
    mode: CovarianceMode,
) -> Result<BagLda> {
    let dim = features
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::Classifier("empty training set".into()))?;
    if labels.len() != features.len() {
        return Err(Error::Classifier("label/feature length mismatch".into()));
    }

    // Class means over the bag; absent classes borrow the full-data mean.
    let mut sums = vec![vec![0.0; dim]; class_count];
    let mut counts = vec![0usize; class_count];
    for &i in indices {
        let c = labels[i];
        counts[c] += 1;
        for (s, &v) in sums[c].iter_mut().zip(&features[i]) {
            *s += v;
        }
    }
    let mut full_sums = vec![vec![0.0; dim]; class_count];
    let mut full_counts = vec![0usize; class_count];
    for (f, &l) in features.iter().zip(labels) {
        full_counts[l] += 1;
        for (s, &v) in full_sums[l].iter_mut().zip(f) {
            *s += v;
        }
    }
    let mut means = Vec::with_capacity(class_count);
    let mut borrowed_mean = vec![false; class_count];
    for c in 0..class_count {
        if counts[c] > 0 {
            means.push(sums[c].iter().map(|s| s / counts[c] as f64).collect::<Vec<_>>());
        } else if full_counts[c] > 0 {
            borrowed_mean[c] = true;
            means.push(
                full_sums[c]
                    .iter()
                    .map(|s| s / full_counts[c] as f64)
                    .collect(),
            );
        } else {
            return Err(Error::Classifier(format!(
                "class {c} has no samples in the training set"
            )));
        }
    }

    // Scatter of bag samples around their class means.
    let n_bag = indices.len();
    let present = counts.iter().filter(|&&c| c > 0).count();
    if n_bag <= present {
        return Err(Error::Classifier(
            "not enough samples to estimate a covariance".into(),
        ));
    }
    let mut centered = DMatrix::zeros(n_bag, dim);
    for (row, &i) in indices.iter().enumerate() {
        let mean = &means[labels[i]];
        for (j, (&v, &m)) in features[i].iter().zip(mean).enumerate() {
            centered[(row, j)] = v - m;
        }
    }

    let (pooled_whitener, class_whiteners) = match mode {
        CovarianceMode::Pooled => {
            let cov = centered.transpose() * &centered / (n_bag - present) as f64;
            (Some(whitener_from_scatter(cov)?), None)
        }
        CovarianceMode::PerClass => {
            let mut ws = Vec::with_capacity(class_count);
            for c in 0..class_count {
                let rows: Vec<usize> = indices
                    .iter()
                    .enumerate()
                    .filter(|&(_, &i)| labels[i] == c)
                    .map(|(row, _)| row)
                    .collect();
                let use_full = rows.len() < 2;
                let cov = if use_full {
                    // Degenerate class in this bag: fall back to the full
                    // training scatter of the class.
                    let full_rows: Vec<&Vec<f64>> = features
                        .iter()
                        .zip(labels)
                        .filter(|&(_, &l)| l == c)
                        .map(|(f, _)| f)
                        .collect();
                    if full_rows.len() < 2 {
                        return Err(Error::Classifier(format!(
                            "class {c} has fewer than 2 samples overall"
                        )));
                    }
                    let mut m = DMatrix::zeros(full_rows.len(), dim);
                    for (r, f) in full_rows.iter().enumerate() {
                        for (j, (&v, &mu)) in f.iter().zip(&means[c]).enumerate() {
                            m[(r, j)] = v - mu;
                        }
                    }
                    m.transpose() * &m / (full_rows.len() - 1) as f64
                } else {
                    let mut m = DMatrix::zeros(rows.len(), dim);
                    for (r, &row) in rows.iter().enumerate() {
                        for j in 0..dim {
                            m[(r, j)] = centered[(row, j)];
                        }
                    }
                    m.transpose() * &m / (rows.len() - 1) as f64
                };
                ws.push(whitener_from_scatter(cov)?);
            }
            (None, Some(ws))
        }
    };

    let mut bag = BagLda {
        dim,
        pooled_whitener,
        class_whiteners,
        classes: (0..class_count)
            .map(|c| LdaClassModel {
                mean: means[c].clone(),
                whitened_mean: Vec::new(),
                stats: ProjectionStats {
                    mu_in: 0.0,
                    sigma_in: 1.0,
                    mu_out: 0.0,
                    sigma_out: 1.0,
                },
                borrowed_mean: borrowed_mean[c],
                borrowed_stats: false,
            })
            .collect(),
    };
    for c in 0..class_count {
        let w = bag.whitener_for(c).to_vec();
        bag.classes[c].whitened_mean = whiten(&w, &means[c], dim);
    }

    fit_projection_stats(&mut bag, features, labels, indices)?;
    Ok(bag)
}

/// Fit the in-class / out-of-class Gaussian statistics of the Mahalanobis
/// projections over the bag sample, borrowing from the full training set for
/// classes with fewer than 2 in-class bag samples.
pub fn fit_projection_stats(
    bag: &mut BagLda,
    features: &[Vec<f64>],
    labels: &[usize],
    indices: &[usize],
) -> Result<()> {
    let class_count = bag.class_count();
    // distances[c] over bag samples, split by membership
    let mut in_class: Vec<Vec<f64>> = vec![Vec::new(); class_count];
    let mut out_class: Vec<Vec<f64>> = vec![Vec::new(); class_count];
    for &i in indices {
        let d = bag.distances(&features[i])?;
        for c in 0..class_count {
            if labels[i] == c {
                in_class[c].push(d[c]);
            } else {
                out_class[c].push(d[c]);
            }
        }
    }

    // Full-set distances computed lazily, only when some class needs them.
    let needs_full = (0..class_count).any(|c| in_class[c].len() < 2 || out_class[c].len() < 2);
    let mut full_in: Vec<Vec<f64>> = vec![Vec::new(); class_count];
    let mut full_out: Vec<Vec<f64>> = vec![Vec::new(); class_count];
    if needs_full {
        for (f, &l) in features.iter().zip(labels) {
            let d = bag.distances(f)?;
            for c in 0..class_count {
                if l == c {
                    full_in[c].push(d[c]);
                } else {
                    full_out[c].push(d[c]);
                }
            }
        }
    }

    for c in 0..class_count {
        let mut borrowed = false;
        let ins = if in_class[c].len() >= 2 {
            &in_class[c]
        } else {
            borrowed = true;
            &full_in[c]
        };
        let outs = if out_class[c].len() >= 2 {
            &out_class[c]
        } else {
            borrowed = true;
            &full_out[c]
        };
        if ins.len() < 2 || outs.len() < 2 {
            return Err(Error::Classifier(format!(
                "class {c}: need >= 2 in-class and out-of-class samples"
            )));
        }
        let (mu_in, sigma_in) = mean_std(ins);
        let (mu_out, sigma_out) = mean_std(outs);
        bag.classes[c].stats = ProjectionStats {
            mu_in,
            sigma_in,
            mu_out,
            sigma_out,
        };
        bag.classes[c].borrowed_stats = borrowed;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_data() -> (Vec<Vec<f64>>, Vec<usize>) {
        // Two tight clusters far apart on the first axis.
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            let jitter = (i % 5) as f64 * 0.01;
            features.push(vec![0.0 + jitter, 0.1 * (i % 3) as f64]);
            labels.push(0);
            features.push(vec![10.0 + jitter, 0.1 * (i % 3) as f64]);
            labels.push(1);
        }
        (features, labels)
    }

    fn fit_full(features: &[Vec<f64>], labels: &[usize], c: usize) -> BagLda {
        let idx: Vec<usize> = (0..features.len()).collect();
        fit_bag(features, labels, c, &idx, CovarianceMode::Pooled).unwrap()
    }

    #[test]
    fn distance_at_class_mean_is_zero() {
        let (features, labels) = toy_data();
        let bag = fit_full(&features, &labels, 2);
        let mean = bag.classes[0].mean.clone();
        let d = bag.mahalanobis(&mean, 0).unwrap();
        assert!(d.abs() < 1e-9, "d = {d}");
    }

    #[test]
    fn identity_covariance_is_euclidean() {
        // Isotropic unit-variance clusters around distinct means: the pooled
        // covariance approaches I, and the whitened distance the Euclidean
        // one. Build the model directly to make the check exact.
        let dim = 2;
        let mut w = vec![0.0; dim * dim];
        w[0] = 1.0;
        w[3] = 1.0;
        let bag = BagLda {
            dim,
            pooled_whitener: Some(w.clone()),
            class_whiteners: None,
            classes: vec![LdaClassModel {
                mean: vec![1.0, 2.0],
                whitened_mean: whiten(&w, &[1.0, 2.0], dim),
                stats: ProjectionStats {
                    mu_in: 0.0,
                    sigma_in: 1.0,
                    mu_out: 0.0,
                    sigma_out: 1.0,
                },
                borrowed_mean: false,
                borrowed_stats: false,
            }],
        };
        let d = bag.mahalanobis(&[4.0, 6.0], 0).unwrap();
        assert!((d - 5.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_covariance_hand_value() {
        // cov = diag(4, 1), x - mean = (2, 0) -> distance 1.
        let dim = 2;
        // L = diag(2, 1), L^{-1} = diag(0.5, 1).
        let w = vec![0.5, 0.0, 0.0, 1.0];
        let bag = BagLda {
            dim,
            pooled_whitener: Some(w.clone()),
            class_whiteners: None,
            classes: vec![LdaClassModel {
                mean: vec![0.0, 0.0],
                whitened_mean: whiten(&w, &[0.0, 0.0], dim),
                stats: ProjectionStats {
                    mu_in: 0.0,
                    sigma_in: 1.0,
                    mu_out: 0.0,
                    sigma_out: 1.0,
                },
                borrowed_mean: false,
                borrowed_stats: false,
            }],
        };
        let d = bag.mahalanobis(&[2.0, 0.0], 0).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn separable_clusters_have_separated_stats() {
        let (features, labels) = toy_data();
        let bag = fit_full(&features, &labels, 2);
        for c in 0..2 {
            let s = &bag.classes[c].stats;
            assert!(
                s.mu_in * 5.0 < s.mu_out,
                "class {c}: mu_in {} vs mu_out {}",
                s.mu_in,
                s.mu_out
            );
            assert!(!bag.classes[c].borrowed_stats);
        }
    }

    #[test]
    fn projection_stats_match_two_pass_oracle() {
        let (features, labels) = toy_data();
        let bag = fit_full(&features, &labels, 2);
        // Recompute the class-0 in-class stats naively.
        let d: Vec<f64> = features
            .iter()
            .zip(&labels)
            .filter(|&(_, &l)| l == 0)
            .map(|(f, _)| bag.mahalanobis(f, 0).unwrap())
            .collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let std = (d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (d.len() - 1) as f64)
            .sqrt();
        let s = &bag.classes[0].stats;
        assert!((s.mu_in - mean).abs() < 1e-12);
        assert!((s.sigma_in - std).abs() < 1e-12);
    }

    #[test]
    fn identical_class_distributions_have_similar_stats() {
        // Both classes drawn from the same cloud: mu_in close to mu_out.
        use rand::prelude::*;
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..600 {
            features.push(vec![
                r.sample::<f64, _>(rand_distr::StandardNormal),
                r.sample::<f64, _>(rand_distr::StandardNormal),
            ]);
            labels.push(i % 2);
        }
        let bag = fit_full(&features, &labels, 2);
        for c in 0..2 {
            let s = &bag.classes[c].stats;
            assert!(
                (s.mu_in - s.mu_out).abs() < 0.15 * s.mu_out.max(1.0),
                "class {c}: {} vs {}",
                s.mu_in,
                s.mu_out
            );
        }
    }

    #[test]
    fn absent_class_borrows_and_is_flagged() {
        let (features, labels) = toy_data();
        // Bag sample containing only class 0.
        let idx: Vec<usize> = (0..features.len()).filter(|&i| labels[i] == 0).collect();
        let bag = fit_bag(&features, &labels, 2, &idx, CovarianceMode::Pooled).unwrap();
        assert!(bag.classes[1].borrowed_mean);
        assert!(bag.classes[1].borrowed_stats);
        assert!(!bag.classes[0].borrowed_mean);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let (features, labels) = toy_data();
        let bag = fit_full(&features, &labels, 2);
        assert!(bag.mahalanobis(&[1.0, 2.0, 3.0], 0).is_err());
        assert!(bag.distances(&[1.0]).is_err());
    }

    #[test]
    fn per_class_mode_fits() {
        let (features, labels) = toy_data();
        let idx: Vec<usize> = (0..features.len()).collect();
        let bag = fit_bag(&features, &labels, 2, &idx, CovarianceMode::PerClass).unwrap();
        assert!(bag.class_whiteners.is_some());
        let d = bag.mahalanobis(&bag.classes[1].mean.clone(), 1).unwrap();
        assert!(d.abs() < 1e-9);
    }
}
