//! Pronunciation lexicon: `word TAB phoneme phoneme ...` per line, duplicate
//! words allowed as pronunciation variants.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::corpus::PhonemeSet;
use crate::error::{Error, Result};

/// Word -> pronunciation variants, each a sequence of phoneme-class indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PronunciationDictionary {
    entries: BTreeMap<String, Vec<Vec<usize>>>,
}

impl PronunciationDictionary {
    pub fn new() -> Self {
        PronunciationDictionary {
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(
        &mut self,
        word: &str,
        symbols: &[&str],
        phoneme_set: &PhonemeSet,
    ) -> Result<()> {
        if symbols.is_empty() {
            return Err(Error::InvalidLexicon {
                path: Path::new("<memory>").into(),
                reason: format!("empty pronunciation for {word:?}"),
            });
        }
        let pron = symbols
            .iter()
            .map(|s| {
                phoneme_set.index_of(s).ok_or_else(|| Error::UnknownPhoneme {
                    word: word.to_string(),
                    symbol: (*s).to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.entries.entry(word.to_string()).or_default().push(pron);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn variants(&self, word: &str) -> Option<&[Vec<usize>]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    /// All (word, pronunciation) pairs in sorted word order, variants in
    /// file order. The deterministic iteration order the decoders rely on.
    pub fn iter_entries(&self) -> impl Iterator<Item = (&str, &[usize])> {
        self.entries
            .iter()
            .flat_map(|(w, prons)| prons.iter().map(move |p| (w.as_str(), p.as_slice())))
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl Default for PronunciationDictionary {
    fn default() -> Self {
        Self::new()
    }
}

/// Parse lexicon text against a phoneme set. Blank lines and `#` comments
/// are skipped.
pub fn parse_lexicon(text: &str, phoneme_set: &PhonemeSet) -> Result<PronunciationDictionary> {
    let mut dict = PronunciationDictionary::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (word, rest) = line.split_once('\t').ok_or_else(|| Error::InvalidLexicon {
            path: Path::new("<memory>").into(),
            reason: format!("line {}: expected 'word TAB phonemes'", lineno + 1),
        })?;
        let symbols: Vec<&str> = rest.split_whitespace().collect();
        dict.insert(word, &symbols, phoneme_set)?;
    }
    Ok(dict)
}

pub fn load_lexicon(
    path: impl AsRef<Path>,
    phoneme_set: &PhonemeSet,
) -> Result<PronunciationDictionary> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_lexicon(&text, phoneme_set).map_err(|e| match e {
        Error::InvalidLexicon { reason, .. } => Error::InvalidLexicon {
            path: path.into(),
            reason,
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_words_parse() {
        let set = PhonemeSet::spanish_sampa();
        let dict = parse_lexicon("casa\tk a s a\nmesa\tm e s a\nsol\ts o l\n", &set).unwrap();
        assert_eq!(dict.len(), 3);
        assert_eq!(dict.variants("casa").unwrap().len(), 1);
    }

    #[test]
    fn removed_phoneme_is_rejected() {
        let set = PhonemeSet::spanish_sampa();
        let err = parse_lexicon("yo\tjj o\n", &set).unwrap_err();
        match err {
            Error::UnknownPhoneme { word, symbol } => {
                assert_eq!(word, "yo");
                assert_eq!(symbol, "jj");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn duplicate_words_keep_both_variants() {
        let set = PhonemeSet::spanish_sampa();
        let dict = parse_lexicon("de\td e\nde\td i\n", &set).unwrap();
        assert_eq!(dict.len(), 1);
        assert_eq!(dict.variants("de").unwrap().len(), 2);
    }

    #[test]
    fn empty_pronunciation_is_rejected() {
        let set = PhonemeSet::spanish_sampa();
        assert!(parse_lexicon("word\t\n", &set).is_err());
    }
}
