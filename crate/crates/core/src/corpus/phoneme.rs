//! Phoneme inventories. The default set is the Spanish SAMPA inventory used
//! throughout: 27 phonemes (29 minus /jj/ and /G/) plus Silence, 28 classes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhonemeKind {
    Vowel,
    Consonant,
    Silence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhonemeClass {
    pub symbol: String,
    pub kind: PhonemeKind,
}

/// Ordered phoneme inventory. Index 0 is the silence class by convention.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhonemeSet {
    classes: Vec<PhonemeClass>,
}

/// Symbol used for the silence class in the default inventory.
pub const SILENCE_SYMBOL: &str = "sil";

impl PhonemeSet {
    pub fn new(classes: Vec<PhonemeClass>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::Config("phoneme set must not be empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        let mut silence_count = 0usize;
        for c in &classes {
            if !seen.insert(c.symbol.clone()) {
                return Err(Error::Config(format!(
                    "duplicate phoneme symbol {:?}",
                    c.symbol
                )));
            }
            if c.kind == PhonemeKind::Silence {
                silence_count += 1;
            }
        }
        if silence_count != 1 {
            return Err(Error::Config(format!(
                "phoneme set must contain exactly one silence class, found {silence_count}"
            )));
        }
        Ok(PhonemeSet { classes })
    }

    /// The Spanish SAMPA inventory: silence first, then the 27 phonemes.
    /// The semivowels /j/ and /w/ are classed as vowels; the optimal
    /// vocabulary groups /w/ with /o/ and /u/, which requires it.
    pub fn spanish_sampa() -> Self {
        let vowels = ["a", "e", "i", "o", "u", "j", "w"];
        let consonants = [
            "p", "b", "t", "d", "k", "g", "tS", "f", "B", "T", "D", "s", "x", "m", "n", "J", "l",
            "L", "r", "rr",
        ];
        let mut classes = vec![PhonemeClass {
            symbol: SILENCE_SYMBOL.into(),
            kind: PhonemeKind::Silence,
        }];
        for s in consonants {
            classes.push(PhonemeClass {
                symbol: s.into(),
                kind: PhonemeKind::Consonant,
            });
        }
        for s in vowels {
            classes.push(PhonemeClass {
                symbol: s.into(),
                kind: PhonemeKind::Vowel,
            });
        }
        PhonemeSet { classes }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[PhonemeClass] {
        &self.classes
    }

    pub fn symbol(&self, index: usize) -> &str {
        &self.classes[index].symbol
    }

    pub fn kind(&self, index: usize) -> PhonemeKind {
        self.classes[index].kind
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.symbol == symbol)
    }

    pub fn silence_index(&self) -> usize {
        self.classes
            .iter()
            .position(|c| c.kind == PhonemeKind::Silence)
            .expect("validated: exactly one silence class")
    }
}
