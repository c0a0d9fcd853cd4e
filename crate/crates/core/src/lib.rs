//! Automatic viseme vocabulary construction and continuous visual speech
//! decoding.
//!
//! The pipeline: normalized mouth-region frames are described by fused
//! DCT / PCA / dense-SIFT appearance features; a bagged multi-class LDA
//! ensemble turns each frame into normalized class likelihoods via the
//! in-class / out-of-class Mahalanobis-CDF ratio; viseme vocabularies are
//! built by iteratively merging the most-confused class pair under a
//! vowel/consonant constraint; and one-state-per-class HMMs decode frame
//! likelihoods into viseme, phoneme, and word sequences with a
//! likelihood-augmented Viterbi search.

pub mod classifier;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod hmm;
pub mod pipeline;
pub mod util;
pub mod vocabulary;

pub use error::{Error, Result};
