//! Text normalization: tokenization, stopword removal and stemming.

use std::collections::BTreeSet;
use std::fmt;

use rust_stemmers::{Algorithm, Stemmer as SnowballStemmer};
use serde::{Deserialize, Serialize};

const DEFAULT_STOPWORDS: &str = include_str!("stopwords_en.txt");

// Stems are re-applied until stable so normalized output is a fixpoint.
const MAX_STEM_ROUNDS: usize = 8;

/// Term → stem function used by a [`NormalizationPipeline`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Stemmer {
    /// English Porter-family (Snowball) stemmer.
    #[default]
    Porter,
    Identity,
}

impl Stemmer {
    pub fn stem(&self, term: &str) -> String {
        match self {
            Stemmer::Identity => term.to_owned(),
            Stemmer::Porter => {
                let stemmer = SnowballStemmer::create(Algorithm::English);
                let mut current = term.to_owned();
                for _ in 0..MAX_STEM_ROUNDS {
                    let next = stemmer.stem(&current).into_owned();
                    if next == current {
                        break;
                    }
                    current = next;
                }
                current
            }
        }
    }
}

impl fmt::Display for Stemmer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stemmer::Porter => f.write_str("porter"),
            Stemmer::Identity => f.write_str("identity"),
        }
    }
}

/// Turns raw text into the ordered list of index terms.
///
/// Tokens are the maximal alphanumeric runs of the lowercased text. A token
/// is dropped when either it or its stem is a stopword, which keeps the
/// pipeline idempotent on its own output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationPipeline {
    stopwords: BTreeSet<String>,
    stemmer: Stemmer,
}

impl Default for NormalizationPipeline {
    fn default() -> Self {
        Self::new(default_stopwords(), Stemmer::Porter)
    }
}

impl NormalizationPipeline {
    pub fn new<I, S>(stopwords: I, stemmer: Stemmer) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let stopwords = stopwords.into_iter().flat_map(|w| tokenize(w.as_ref())).collect();
        Self { stopwords, stemmer }
    }

    /// No stopwords, no stemming.
    pub fn plain() -> Self {
        Self::new(std::iter::empty::<&str>(), Stemmer::Identity)
    }

    /// Parses a stopword file: one term per line, blank lines ignored.
    pub fn stopwords_from_str(contents: &str) -> Vec<String> {
        contents
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_owned)
            .collect()
    }

    pub fn stemmer(&self) -> Stemmer {
        self.stemmer
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    pub fn is_stopword(&self, term: &str) -> bool {
        self.stopwords.contains(term)
    }

    pub fn normalize(&self, text: &str) -> Vec<String> {
        tokenize(text)
            .into_iter()
            .filter(|tok| !self.is_stopword(tok))
            .filter_map(|tok| {
                let stem = self.stemmer.stem(&tok);
                (!stem.is_empty() && !self.is_stopword(&stem)).then_some(stem)
            })
            .collect()
    }
}

pub fn default_stopwords() -> Vec<String> {
    NormalizationPipeline::stopwords_from_str(DEFAULT_STOPWORDS)
}

/// Lowercased maximal alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    // Lowercasing can emit non-alphanumeric marks (e.g. U+0130), so split after it.
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}
