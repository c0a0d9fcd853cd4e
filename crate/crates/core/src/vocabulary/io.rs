//! Vocabulary files: UTF-8 JSON with groups as phoneme symbol lists plus the
//! merge history. The shipped 20-viseme Spanish vocabulary is embedded.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{PhonemeKind, PhonemeSet};
use crate::error::{Error, Result};
use crate::vocabulary::{MergeRecord, VisemeGroup, VisemeVocabulary};

#[derive(Debug, Serialize, Deserialize)]
struct VocabularyFile {
    groups: Vec<GroupEntry>,
    #[serde(default)]
    merge_history: Vec<HistoryEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GroupEntry {
    symbols: Vec<String>,
    kind: PhonemeKind,
}

#[derive(Debug, Serialize, Deserialize)]
struct HistoryEntry {
    step: usize,
    pair: (String, String),
    ambiguity: f64,
}

pub fn vocabulary_from_json(text: &str, phoneme_set: &PhonemeSet) -> Result<VisemeVocabulary> {
    let parsed: VocabularyFile =
        serde_json::from_str(text).map_err(|e| Error::Vocabulary(e.to_string()))?;
    let mut groups = Vec::with_capacity(parsed.groups.len());
    for g in &parsed.groups {
        let mut members = Vec::with_capacity(g.symbols.len());
        for s in &g.symbols {
            let idx = phoneme_set.index_of(s).ok_or_else(|| {
                Error::Vocabulary(format!("unknown phoneme symbol {s:?} in vocabulary"))
            })?;
            if phoneme_set.kind(idx) != g.kind {
                return Err(Error::Vocabulary(format!(
                    "symbol {s:?} is {:?} but its group is {:?}",
                    phoneme_set.kind(idx),
                    g.kind
                )));
            }
            members.push(idx);
        }
        members.sort_unstable();
        groups.push(VisemeGroup {
            members,
            kind: g.kind,
        });
    }
    groups.sort_by_key(|g| g.members[0]);
    let mut vocab = VisemeVocabulary::from_groups(groups, phoneme_set.len())?;
    vocab.merge_history = parsed
        .merge_history
        .iter()
        .map(|h| -> Result<MergeRecord> {
            let resolve = |s: &String| {
                phoneme_set
                    .index_of(s)
                    .ok_or_else(|| Error::Vocabulary(format!("unknown symbol {s:?} in history")))
            };
            Ok(MergeRecord {
                step: h.step,
                pair: (resolve(&h.pair.0)?, resolve(&h.pair.1)?),
                ambiguity: h.ambiguity,
            })
        })
        .collect::<Result<_>>()?;
    Ok(vocab)
}

pub fn load_vocabulary(path: impl AsRef<Path>, phoneme_set: &PhonemeSet) -> Result<VisemeVocabulary> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    vocabulary_from_json(&text, phoneme_set)
}

pub fn save_vocabulary(
    path: impl AsRef<Path>,
    vocab: &VisemeVocabulary,
    phoneme_set: &PhonemeSet,
) -> Result<()> {
    let path = path.as_ref();
    let file = VocabularyFile {
        groups: vocab
            .groups()
            .iter()
            .map(|g| GroupEntry {
                symbols: g
                    .members
                    .iter()
                    .map(|&m| phoneme_set.symbol(m).to_string())
                    .collect(),
                kind: g.kind,
            })
            .collect(),
        merge_history: vocab
            .merge_history
            .iter()
            .map(|r| HistoryEntry {
                step: r.step,
                pair: (
                    phoneme_set.symbol(r.pair.0).to_string(),
                    phoneme_set.symbol(r.pair.1).to_string(),
                ),
                ambiguity: r.ambiguity,
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&file).expect("vocabulary serialization cannot fail");
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

/// The shipped 20-viseme Spanish vocabulary (also at
/// `fixtures/es_sampa_20.json`), resolved against the default inventory.
pub fn spanish_20_fixture() -> VisemeVocabulary {
    let set = PhonemeSet::spanish_sampa();
    vocabulary_from_json(SPANISH_20_JSON, &set).expect("embedded fixture is valid")
}

pub const SPANISH_20_JSON: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/es_sampa_20.json"));

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_parses_with_20_groups() {
        let set = PhonemeSet::spanish_sampa();
        let vocab = spanish_20_fixture();
        assert_eq!(vocab.len(), 20);
        vocab.validate().unwrap();
        // Silence stays singleton.
        let sil = vocab.group_of(set.silence_index());
        assert_eq!(vocab.groups()[sil].members.len(), 1);
        // The multi-phoneme groups of the optimal vocabulary.
        for expect in [
            vec!["s", "tS", "t"],
            vec!["m", "p", "b"],
            vec!["a", "e", "i"],
            vec!["o", "u", "w"],
        ] {
            let mut members: Vec<usize> =
                expect.iter().map(|s| set.index_of(s).unwrap()).collect();
            members.sort_unstable();
            assert!(
                vocab.groups().iter().any(|g| g.members == members),
                "missing group {expect:?}"
            );
        }
    }

    #[test]
    fn table_groups_map_to_one_viseme() {
        let set = PhonemeSet::spanish_sampa();
        let vocab = spanish_20_fixture();
        let seq: Vec<usize> = ["m", "p", "b"]
            .iter()
            .map(|s| set.index_of(s).unwrap())
            .collect();
        let mapped = vocab.map_sequence(&seq);
        assert_eq!(mapped[0], mapped[1]);
        assert_eq!(mapped[1], mapped[2]);
    }

    #[test]
    fn save_load_round_trip() {
        let set = PhonemeSet::spanish_sampa();
        let vocab = spanish_20_fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.json");
        save_vocabulary(&path, &vocab, &set).unwrap();
        let back = load_vocabulary(&path, &set).unwrap();
        assert_eq!(vocab, back);
    }

    #[test]
    fn unknown_symbol_is_rejected() {
        let set = PhonemeSet::spanish_sampa();
        let bad = r#"{"groups": [{"symbols": ["zz"], "kind": "vowel"}]}"#;
        assert!(vocabulary_from_json(bad, &set).is_err());
    }
}
