//! Corpus loading, validation, and synthesis: ROI frame sequences,
//! frame-level phoneme labels, word transcriptions, pronunciation lexicons.

mod image_io;
mod lexicon;
mod manifest;
mod phoneme;
mod roi;
mod synthetic;

pub use image_io::{read_frame, write_pgm, write_png};
pub use lexicon::{load_lexicon, parse_lexicon, PronunciationDictionary};
pub use manifest::{load_manifest, save_corpus};
pub use phoneme::{PhonemeClass, PhonemeKind, PhonemeSet, SILENCE_SYMBOL};
pub use roi::{normalize_roi, Grid, RoiFrame, ROI_HEIGHT, ROI_WIDTH};
pub use synthetic::{generate_synthetic_corpus, SyntheticSpec, SyntheticWord};

use crate::error::{Error, Result};

/// One utterance: frames with per-frame phoneme labels and word transcription.
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub speaker: String,
    pub frames: Vec<RoiFrame>,
    pub frame_labels: Vec<usize>,
    pub words: Vec<String>,
}

impl Utterance {
    pub fn validate(&self, phoneme_set: &PhonemeSet) -> Result<()> {
        if self.frame_labels.len() != self.frames.len() {
            return Err(Error::InvalidUtterance {
                utterance: self.id.clone(),
                reason: format!(
                    "{} labels for {} frames",
                    self.frame_labels.len(),
                    self.frames.len()
                ),
            });
        }
        if let Some(&bad) = self
            .frame_labels
            .iter()
            .find(|&&l| l >= phoneme_set.len())
        {
            return Err(Error::InvalidUtterance {
                utterance: self.id.clone(),
                reason: format!(
                    "label index {bad} out of range for {} classes",
                    phoneme_set.len()
                ),
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// An immutable, validated collection of utterances sharing a phoneme set.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub phoneme_set: PhonemeSet,
    pub utterances: Vec<Utterance>,
}

impl Corpus {
    /// Validates every utterance and orders them by id.
    pub fn new(phoneme_set: PhonemeSet, mut utterances: Vec<Utterance>) -> Result<Self> {
        for utt in &utterances {
            utt.validate(&phoneme_set)?;
        }
        utterances.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in utterances.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::InvalidUtterance {
                    utterance: pair[0].id.clone(),
                    reason: "duplicate utterance id".into(),
                });
            }
        }
        Ok(Corpus {
            phoneme_set,
            utterances,
        })
    }

    pub fn total_frames(&self) -> usize {
        self.utterances.iter().map(Utterance::len).sum()
    }

    /// Per-speaker split: the first `train_per_speaker` utterances of each
    /// speaker (in id order) go to the train corpus, the rest to test.
    pub fn split_per_speaker(&self, train_per_speaker: usize) -> (Corpus, Corpus) {
        let mut counts: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
        let mut train = Vec::new();
        let mut test = Vec::new();
        for utt in &self.utterances {
            let seen = counts.entry(utt.speaker.as_str()).or_insert(0);
            if *seen < train_per_speaker {
                train.push(utt.clone());
            } else {
                test.push(utt.clone());
            }
            *seen += 1;
        }
        (
            Corpus {
                phoneme_set: self.phoneme_set.clone(),
                utterances: train,
            },
            Corpus {
                phoneme_set: self.phoneme_set.clone(),
                utterances: test,
            },
        )
    }

    /// Disjoint utterance folds for cross-validation, round-robin in id order.
    pub fn folds(&self, k: usize) -> Vec<Vec<usize>> {
        let mut folds = vec![Vec::new(); k.max(1)];
        for (i, _) in self.utterances.iter().enumerate() {
            folds[i % k.max(1)].push(i);
        }
        folds
    }

    /// Corpus restricted to a subset of utterance indices.
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        Corpus {
            phoneme_set: self.phoneme_set.clone(),
            utterances: indices
                .iter()
                .map(|&i| self.utterances[i].clone())
                .collect(),
        }
    }
}
