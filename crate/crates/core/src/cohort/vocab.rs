use std::collections::HashMap;

use crate::{Error, Result};

pub const PAD: &str = "<pad>";
/// Placeholder token standing in for a stay without notes.
pub const NULL_NOTE: &str = "<none>";

/// Words whose frequency follows the latent note-side risk.
pub const RISK_WORDS: [&str; 10] = [
    "lasix",
    "ci",
    "labile",
    "insulin",
    "wires",
    "cabg",
    "dilantin",
    "neuro",
    "jaundiced",
    "cvp",
];

/// Words whose frequency follows the archetype, one row per archetype.
pub const MARKER_WORDS: [[&str; 4]; 3] = [
    ["ambulating", "tolerating", "stable", "alert"],
    ["pressors", "septic", "intubated", "lactate"],
    ["edema", "diuresis", "contrast", "hypotensive"],
];

/// Closed word list; index 0 is padding, index 1 the null note.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_words(words: Vec<String>) -> Result<Self> {
        if words.len() < 2 || words[0] != PAD || words[1] != NULL_NOTE {
            return Err(Error::Schema(format!(
                "vocabulary must start with `{PAD}` and `{NULL_NOTE}`"
            )));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::Schema(format!("duplicate vocabulary word `{w}`")));
            }
        }
        Ok(Self { words, index })
    }

    /// Reserved tokens, risk and marker words, then `wNNNN` fillers up to `size`.
    pub fn synthetic(size: usize) -> Result<Self> {
        let mut words: Vec<String> = vec![PAD.into(), NULL_NOTE.into()];
        words.extend(RISK_WORDS.iter().map(|w| w.to_string()));
        words.extend(MARKER_WORDS.iter().flatten().map(|w| w.to_string()));
        if size <= words.len() {
            return Err(Error::Config(format!(
                "vocab_size must exceed {} to leave room for filler words, got {size}",
                words.len()
            )));
        }
        let fillers = size - words.len();
        words.extend((0..fillers).map(|i| format!("w{i:04}")));
        Self::from_words(words)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Filler words (everything after the reserved, risk and marker words).
    pub fn fillers(&self) -> &[String] {
        &self.words[2 + RISK_WORDS.len() + 12..]
    }
}
