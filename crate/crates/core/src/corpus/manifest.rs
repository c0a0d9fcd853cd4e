//! The corpus manifest: a UTF-8 JSON file listing the phoneme set and, per
//! utterance, frame image paths (relative to the manifest), label indices,
//! and word tokens.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{image_io, Corpus, PhonemeClass, PhonemeSet, Utterance};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct ManifestFile {
    phoneme_set: Vec<PhonemeClass>,
    utterances: Vec<ManifestUtterance>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestUtterance {
    id: String,
    speaker: String,
    frames: Vec<String>,
    labels: Vec<usize>,
    #[serde(default)]
    words: Vec<String>,
}

/// Load and validate a corpus manifest. Frame paths resolve relative to the
/// manifest's directory; utterances come back ordered by id.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed: ManifestFile =
        serde_json::from_str(&text).map_err(|e| Error::InvalidManifest {
            path: path.into(),
            reason: e.to_string(),
        })?;
    let phoneme_set = PhonemeSet::new(parsed.phoneme_set)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let utterances = parsed
        .utterances
        .into_par_iter()
        .map(|mu| -> Result<Utterance> {
            if mu.labels.len() != mu.frames.len() {
                return Err(Error::InvalidUtterance {
                    utterance: mu.id.clone(),
                    reason: format!(
                        "{} labels for {} frames",
                        mu.labels.len(),
                        mu.frames.len()
                    ),
                });
            }
            let frames = mu
                .frames
                .iter()
                .map(|rel| image_io::read_frame(&base.join(rel)))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::InvalidUtterance {
                    utterance: mu.id.clone(),
                    reason: e.to_string(),
                })?;
            Ok(Utterance {
                id: mu.id,
                speaker: mu.speaker,
                frames,
                frame_labels: mu.labels,
                words: mu.words,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Corpus::new(phoneme_set, utterances)
}

/// Write a corpus as manifest + one PGM file per frame under `dir`.
/// Reloading the result yields an equal corpus.
pub fn save_corpus(corpus: &Corpus, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let frames_dir = dir.join("frames");
    fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;

    corpus
        .utterances
        .par_iter()
        .try_for_each(|utt| -> Result<()> {
            for (i, frame) in utt.frames.iter().enumerate() {
                let rel = frame_rel_path(&utt.id, i);
                image_io::write_pgm(&dir.join(&rel), frame)?;
            }
            Ok(())
        })?;

    let manifest = ManifestFile {
        phoneme_set: corpus.phoneme_set.classes().to_vec(),
        utterances: corpus
            .utterances
            .iter()
            .map(|utt| ManifestUtterance {
                id: utt.id.clone(),
                speaker: utt.speaker.clone(),
                frames: (0..utt.frames.len())
                    .map(|i| frame_rel_path(&utt.id, i))
                    .collect(),
                labels: utt.frame_labels.clone(),
                words: utt.words.clone(),
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&manifest)
        .expect("manifest serialization cannot fail");
    let manifest_path = dir.join("manifest.json");
    fs::write(&manifest_path, json).map_err(|e| Error::io(&manifest_path, e))
}

fn frame_rel_path(utt_id: &str, index: usize) -> String {
    format!("frames/{utt_id}_{index:05}.pgm")
}
