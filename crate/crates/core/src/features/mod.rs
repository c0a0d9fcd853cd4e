//! Per-frame appearance descriptors: spatial and temporal DCT / PCA /
//! dense-SIFT streams, fitted on training data, z-scored and fused by
//! concatenation.

pub mod cache;
pub mod dct;
pub mod pca;
pub mod sift;
pub mod temporal;

pub use dct::{dct2, dct_features, select_dct_count};
pub use pca::{parallel_analysis, pca_fit, PcaModel};
pub use sift::dense_sift;
pub use temporal::temporal_frame;

use serde::{Deserialize, Serialize};

use crate::corpus::{Grid, RoiFrame, Utterance, ROI_HEIGHT, ROI_WIDTH};
use crate::error::{Error, Result};
use crate::util::{fnv1a64, mix_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stream {
    DctSpatial,
    DctTemporal,
    PcaSpatial,
    PcaTemporal,
    SiftSpatial,
    SiftTemporal,
}

impl Stream {
    pub fn name(self) -> &'static str {
        match self {
            Stream::DctSpatial => "dct_spatial",
            Stream::DctTemporal => "dct_temporal",
            Stream::PcaSpatial => "pca_spatial",
            Stream::PcaTemporal => "pca_temporal",
            Stream::SiftSpatial => "sift_spatial",
            Stream::SiftTemporal => "sift_temporal",
        }
    }

    fn needs_pca(self) -> bool {
        !matches!(self, Stream::DctSpatial | Stream::DctTemporal)
    }

    fn is_temporal(self) -> bool {
        matches!(
            self,
            Stream::DctTemporal | Stream::PcaTemporal | Stream::SiftTemporal
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub streams: Vec<Stream>,
    pub dct_coeffs: usize,
    pub pca_variance: f64,
    pub sift_grid_step: usize,
    pub pa_permutations: usize,
    pub pa_percentile: f64,
    /// Cap on the number of frames used to fit PCA bases and run Parallel
    /// Analysis (deterministic stride subsample); 0 = no cap.
    pub fit_sample_cap: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            streams: vec![
                Stream::DctSpatial,
                Stream::DctTemporal,
                Stream::SiftSpatial,
                Stream::SiftTemporal,
            ],
            dct_coeffs: 121,
            pca_variance: 0.90,
            sift_grid_step: sift::SUPPORT / 2,
            pa_permutations: 100,
            pa_percentile: 0.95,
            fit_sample_cap: 512,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.streams.is_empty() {
            return Err(Error::Feature("no feature streams configured".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if !self.streams.iter().all(|s| seen.insert(*s)) {
            return Err(Error::Feature("duplicate feature stream".into()));
        }
        if self.dct_coeffs == 0 || self.dct_coeffs > ROI_HEIGHT * ROI_WIDTH {
            return Err(Error::Feature(format!(
                "dct_coeffs {} out of range 1..={}",
                self.dct_coeffs,
                ROI_HEIGHT * ROI_WIDTH
            )));
        }
        if !(self.pca_variance > 0.0 && self.pca_variance <= 1.0) {
            return Err(Error::Feature(format!(
                "pca_variance {} must lie in (0, 1]",
                self.pca_variance
            )));
        }
        if self.sift_grid_step == 0 {
            return Err(Error::Feature("sift_grid_step must be >= 1".into()));
        }
        if self.pa_permutations == 0 {
            return Err(Error::Feature("pa_permutations must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutSpan {
    pub stream: Stream,
    pub start: usize,
    pub len: usize,
}

/// One fused per-frame descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamModel {
    pub stream: Stream,
    pub pca: Option<PcaModel>,
    /// Training mean / standard deviation per output dimension (population
    /// variance); dimensions with zero variance z-score to zero.
    pub zscore_mean: Vec<f64>,
    pub zscore_std: Vec<f64>,
    pub dim: usize,
}

/// Feature extraction recipe fitted on training data. Immutable once fitted;
/// extraction is stateless per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureModel {
    pub config: FeatureConfig,
    pub streams: Vec<StreamModel>,
    pub layout: Vec<LayoutSpan>,
    pub dim: usize,
}

fn raw_stream_vector(
    stream: Stream,
    config: &FeatureConfig,
    utterance: &Utterance,
    t: usize,
) -> Result<Vec<f64>> {
    let spatial_grid: &Grid = utterance.frames[t].grid();
    let temporal: Grid;
    let grid: &Grid = if stream.is_temporal() {
        temporal = temporal_frame(&utterance.frames, t);
        &temporal
    } else {
        spatial_grid
    };
    match stream {
        Stream::DctSpatial | Stream::DctTemporal => {
            dct::dct_features_grid(grid, config.dct_coeffs)
        }
        Stream::PcaSpatial | Stream::PcaTemporal => Ok(grid.values().to_vec()),
        Stream::SiftSpatial | Stream::SiftTemporal => {
            Ok(dense_sift(grid, config.sift_grid_step))
        }
    }
}

/// Fit the extraction recipe on training utterances: PCA bases (component
/// count from explained variance for pca streams, from Parallel Analysis for
/// sift streams) and per-stream z-score statistics.
pub fn fit_features(
    train: &[Utterance],
    config: &FeatureConfig,
    seed: u64,
) -> Result<FeatureModel> {
    config.validate()?;
    let total_frames: usize = train.iter().map(Utterance::len).sum();
    if total_frames == 0 {
        return Err(Error::Feature("no training frames".into()));
    }

    let mut streams = Vec::with_capacity(config.streams.len());
    for (si, &stream) in config.streams.iter().enumerate() {
        // PCA basis fit on a capped, deterministic stride subsample.
        let pca = if stream.needs_pca() {
            let cap = if config.fit_sample_cap == 0 {
                total_frames
            } else {
                config.fit_sample_cap.min(total_frames)
            };
            let stride = total_frames.div_ceil(cap);
            let mut samples = Vec::with_capacity(cap);
            let mut global = 0usize;
            for utt in train {
                for t in 0..utt.len() {
                    if global.is_multiple_of(stride) {
                        samples.push(raw_stream_vector(stream, config, utt, t)?);
                    }
                    global += 1;
                }
            }
            if samples.len() < 2 {
                return Err(Error::Feature(format!(
                    "stream {}: need >= 2 fit samples, got {}",
                    stream.name(),
                    samples.len()
                )));
            }
            let model = match stream {
                Stream::PcaSpatial | Stream::PcaTemporal => {
                    pca_fit(&samples, config.pca_variance)?
                }
                _ => {
                    let k = parallel_analysis(
                        &samples,
                        config.pa_permutations,
                        config.pa_percentile,
                        mix_seed(seed, si as u64),
                    )?
                    .max(1);
                    let mut m = pca_fit(&samples, 1.0)?;
                    m.n_retained = k.min(m.n_components);
                    m
                }
            };
            Some(model)
        } else {
            None
        };

        let dim = match &pca {
            Some(m) => m.n_retained,
            None => config.dct_coeffs,
        };

        // z-score statistics over the full training set.
        let mut sum = vec![0.0; dim];
        let mut sumsq = vec![0.0; dim];
        for utt in train {
            for t in 0..utt.len() {
                let raw = raw_stream_vector(stream, config, utt, t)?;
                let v = match &pca {
                    Some(m) => m.project(&raw),
                    None => raw,
                };
                for ((s, q), &x) in sum.iter_mut().zip(&mut sumsq).zip(&v) {
                    *s += x;
                    *q += x * x;
                }
            }
        }
        let n = total_frames as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let std: Vec<f64> = sumsq
            .iter()
            .zip(&mean)
            .map(|(q, m)| (q / n - m * m).max(0.0).sqrt())
            .collect();

        streams.push(StreamModel {
            stream,
            pca,
            zscore_mean: mean,
            zscore_std: std,
            dim,
        });
    }

    let mut layout = Vec::with_capacity(streams.len());
    let mut start = 0usize;
    for s in &streams {
        layout.push(LayoutSpan {
            stream: s.stream,
            start,
            len: s.dim,
        });
        start += s.dim;
    }

    Ok(FeatureModel {
        config: config.clone(),
        streams,
        layout,
        dim: start,
    })
}

impl FeatureModel {
    /// Fused descriptors for every frame of the utterance. Deterministic
    /// given the fitted model.
    pub fn extract(&self, utterance: &Utterance) -> Result<Vec<FeatureVector>> {
        let mut out = Vec::with_capacity(utterance.len());
        for t in 0..utterance.len() {
            let mut values = Vec::with_capacity(self.dim);
            for sm in &self.streams {
                let raw = raw_stream_vector(sm.stream, &self.config, utterance, t)?;
                let projected = match &sm.pca {
                    Some(m) => m.project(&raw),
                    None => raw,
                };
                if projected.len() != sm.dim {
                    return Err(Error::Feature(format!(
                        "stream {}: dimension {} does not match fitted {}",
                        sm.stream.name(),
                        projected.len(),
                        sm.dim
                    )));
                }
                for ((&v, &m), &s) in projected
                    .iter()
                    .zip(&sm.zscore_mean)
                    .zip(&sm.zscore_std)
                {
                    let denom = if s > 1e-12 { s } else { 1.0 };
                    values.push((v - m) / denom);
                }
            }
            out.push(FeatureVector { values });
        }
        Ok(out)
    }

    /// Stable fingerprint of the fitted recipe, for cache validation.
    pub fn fingerprint(&self) -> u64 {
        let json = serde_json::to_vec(self).expect("model serialization cannot fail");
        fnv1a64(&json)
    }
}

/// Extract one frame outside of any utterance context (spatial streams only).
pub fn extract_single_frame(model: &FeatureModel, frame: &RoiFrame) -> Result<FeatureVector> {
    let utt = Utterance {
        id: String::new(),
        speaker: String::new(),
        frames: vec![frame.clone()],
        frame_labels: vec![0],
        words: vec![],
    };
    Ok(model.extract(&utt)?.remove(0))
}
