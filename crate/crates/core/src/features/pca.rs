//! PCA with explained-variance component selection, plus Parallel Analysis
//! (permutation-based significance of leading eigenvalues).

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Column-orthonormal basis, row-major `dim x n_components`.
    pub basis: Vec<f64>,
    pub n_components: usize,
    /// Per-component variances, non-increasing.
    pub eigenvalues: Vec<f64>,
    pub n_retained: usize,
    /// All-identical sample set: a single zero-variance component.
    pub degenerate: bool,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Project onto the first `k` components (k <= n_components).
    pub fn project_k(&self, x: &[f64], k: usize) -> Vec<f64> {
        let d = self.dim();
        assert!(x.len() == d, "dimension mismatch");
        assert!(k <= self.n_components);
        let mut out = vec![0.0; k];
        for (i, (&xv, &mv)) in x.iter().zip(&self.mean).enumerate() {
            let centered = xv - mv;
            let row = &self.basis[i * self.n_components..i * self.n_components + k];
            for (o, &b) in out.iter_mut().zip(row) {
                *o += centered * b;
            }
        }
        out
    }

    /// Project onto the retained components.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.project_k(x, self.n_retained)
    }

    /// Reconstruct from a `k`-component projection.
    pub fn reconstruct(&self, proj: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let k = proj.len();
        let mut out = self.mean.clone();
        for i in 0..d {
            let row = &self.basis[i * self.n_components..i * self.n_components + k];
            for (p, &b) in proj.iter().zip(row) {
                out[i] += p * b;
            }
        }
        out
    }
}

/// Eigenvalues (descending) of the sample covariance of `rows`, via the
/// covariance matrix when `dim <= n`, otherwise via the Gram matrix.
/// Optionally also returns the corresponding basis columns.
fn covariance_eig(rows: &[Vec<f64>], want_basis: bool) -> (Vec<f64>, Option<Vec<Vec<f64>>>) {
    let n = rows.len();
    let d = rows[0].len();
    let denom = (n - 1) as f64;

    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, &v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);

    if d <= n {
        let cov = centered.transpose() * &centered / denom;
        let eig = cov.symmetric_eigen();
        let mut idx: Vec<usize> = (0..d).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let vals: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let basis = want_basis.then(|| {
            idx.iter()
                .map(|&i| eig.eigenvectors.column(i).iter().cloned().collect())
                .collect()
        });
        (vals, basis)
    } else {
        // Gram route: eigenvectors u of (X X^T)/denom give basis X^T u / sqrt(denom * lambda).
        let gram = &centered * centered.transpose() / denom;
        let eig = gram.symmetric_eigen();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let vals: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let basis = want_basis.then(|| {
            idx.iter()
                .zip(&vals)
                .map(|(&i, &lambda)| {
                    let u: DVector<f64> = eig.eigenvectors.column(i).into();
                    let col = centered.transpose() * u;
                    let scale = (denom * lambda).sqrt();
                    if scale > 1e-300 {
                        (col / scale).iter().cloned().collect()
                    } else {
                        vec![0.0; d]
                    }
                })
                .collect()
        });
        (vals, basis)
    }
}

/// Fit a PCA model retaining the smallest component count whose cumulative
/// explained variance reaches `variance`.
pub fn pca_fit(samples: &[Vec<f64>], variance: f64) -> Result<PcaModel> {
    if samples.len() < 2 {
        return Err(Error::Feature(format!(
            "pca needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if !(variance > 0.0 && variance <= 1.0) {
        return Err(Error::Feature(format!(
            "explained-variance target {variance} must lie in (0, 1]"
        )));
    }
    let n = samples.len();
    let d = samples[0].len();
    if samples.iter().any(|s| s.len() != d) {
        return Err(Error::Feature("inconsistent sample dimensions".into()));
    }

    let mut mean = vec![0.0; d];
    for s in samples {
        for (m, &v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let (vals, basis_cols) = covariance_eig(samples, true);
    let total: f64 = vals.iter().sum();
    if total <= f64::EPSILON * d as f64 {
        // Degenerate: no variance at all.
        let mut basis = vec![0.0; d];
        basis[0] = 1.0;
        return Ok(PcaModel {
            mean,
            basis,
            n_components: 1,
            eigenvalues: vec![0.0],
            n_retained: 1,
            degenerate: true,
        });
    }
    let basis_cols = basis_cols.expect("requested basis");

    // Keep components up to numerical rank.
    let rank = vals
        .iter()
        .take_while(|&&v| v > total * 1e-12)
        .count()
        .max(1);
    let kept = rank.min(basis_cols.len());
    let eigenvalues: Vec<f64> = vals[..kept].to_vec();

    let mut cum = 0.0;
    let mut n_retained = kept;
    for (k, &v) in eigenvalues.iter().enumerate() {
        cum += v;
        if cum / total >= variance {
            n_retained = k + 1;
            break;
        }
    }

    let mut basis = vec![0.0; d * kept];
    for (j, col) in basis_cols[..kept].iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            basis[i * kept + j] = v;
        }
    }

    Ok(PcaModel {
        mean,
        basis,
        n_components: kept,
        eigenvalues,
        n_retained,
        degenerate: false,
    })
}

/// Parallel Analysis: the number of leading sample eigenvalues exceeding the
/// given percentile of eigenvalues obtained from `n_perm` column-wise
/// independently permuted copies of the data. Permutations are drawn from
/// the seed, so the result is deterministic.
pub fn parallel_analysis(
    samples: &[Vec<f64>],
    n_perm: usize,
    percentile: f64,
    seed: u64,
) -> Result<usize> {
    if samples.len() < 2 {
        return Err(Error::Feature("parallel analysis needs >= 2 samples".into()));
    }
    if n_perm == 0 {
        return Err(Error::Feature("n_perm must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&percentile) {
        return Err(Error::Feature(format!(
            "percentile {percentile} must lie in [0, 1]"
        )));
    }
    let n = samples.len();
    let d = samples[0].len();
    let (real_vals, _) = covariance_eig(samples, false);
    let n_ranks = real_vals.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm_vals: Vec<Vec<f64>> = vec![Vec::with_capacity(n_perm); n_ranks];
    let mut shuffled = samples.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for _ in 0..n_perm {
        for col in 0..d {
            perm.shuffle(&mut rng);
            for (i, &src) in perm.iter().enumerate() {
                shuffled[i][col] = samples[src][col];
            }
        }
        let (vals, _) = covariance_eig(&shuffled, false);
        for (rank, v) in vals.into_iter().enumerate() {
            if rank < n_ranks {
                perm_vals[rank].push(v);
            }
        }
    }

    // Nearest-rank empirical quantile.
    let q_index = ((percentile * n_perm as f64).ceil() as usize).clamp(1, n_perm) - 1;
    let mut count = 0;
    for (rank, &real) in real_vals.iter().enumerate() {
        let mut vs = perm_vals[rank].clone();
        vs.sort_by(f64::total_cmp);
        let threshold = vs[q_index.min(vs.len() - 1)];
        if real > threshold {
            count += 1;
        } else {
            break;
        }
    }
    Ok(count)
}
