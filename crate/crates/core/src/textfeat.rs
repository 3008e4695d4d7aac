//! Lexicon-based affect scoring of the text that surrounds a meme.
//!
//! A document is reduced to a bag of lowercase alphanumeric tokens and scored
//! against one lexicon per axis (happiness, arousal, dominance, polarity).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Word → score for one affect axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lexicon<T> {
    pub axis_name: String,
    scores: BTreeMap<String, T>,
}

impl<T: Scalar> Lexicon<T> {
    pub fn new(axis_name: impl Into<String>, entries: impl IntoIterator<Item = (String, T)>) -> Result<Self> {
        let axis_name = axis_name.into();
        let mut scores = BTreeMap::new();
        for (word, score) in entries {
            let word = word.to_lowercase();
            if scores.insert(word.clone(), score).is_some() {
                return Err(Error::InvalidParameter(format!(
                    "lexicon {axis_name}: duplicate word {word:?}"
                )));
            }
        }
        if scores.is_empty() {
            return Err(Error::Empty(format!("lexicon {axis_name} has no entries")));
        }
        Ok(Lexicon { axis_name, scores })
    }

    /// Parses `word<TAB>score` lines. Scores may be numbers or the labels
    /// `positive` / `negative`, read as +1 / −1.
    pub fn parse(axis_name: &str, reader: impl BufRead, origin: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(origin, e))?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                msg,
            };
            let (word, value) = line
                .split_once('\t')
                .ok_or_else(|| parse_err(format!("expected word<TAB>score, got {line:?}")))?;
            let value = value.trim();
            let score = match value.to_ascii_lowercase().as_str() {
                "positive" | "pos" => T::one(),
                "negative" | "neg" => T::zero() - T::one(),
                _ => {
                    let x: f64 = value
                        .parse()
                        .map_err(|_| parse_err(format!("bad score {value:?}")))?;
                    T::from_f64(x).ok_or_else(|| parse_err(format!("score {value} out of range")))?
                }
            };
            entries.push((word.trim().to_owned(), score));
        }
        Lexicon::new(axis_name, entries).map_err(|e| match e {
            Error::InvalidParameter(msg) => Error::Parse {
                path: origin.to_path_buf(),
                line: 0,
                msg,
            },
            other => other,
        })
    }

    pub fn load(axis_name: &str, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Lexicon::parse(axis_name, BufReader::new(file), path)
    }

    pub fn get(&self, word: &str) -> Option<T> {
        self.scores.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, T)> {
        self.scores.iter().map(|(w, &s)| (w.as_str(), s))
    }

    /// `sᵀ1`, the sum of all lexicon scores.
    pub fn score_sum(&self) -> T {
        self.scores.values().fold(T::zero(), |acc, &s| acc + s)
    }

    pub fn min_score(&self) -> T {
        self.scores.values().copied().fold(None, |m: Option<T>, s| match m {
            Some(m) if m <= s => Some(m),
            _ => Some(s),
        }).expect("lexicon is non-empty")
    }

    pub fn max_score(&self) -> T {
        self.scores.values().copied().fold(None, |m: Option<T>, s| match m {
            Some(m) if m >= s => Some(m),
            _ => Some(s),
        }).expect("lexicon is non-empty")
    }
}

/// Word frequencies of one document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DocumentBag {
    pub counts: BTreeMap<String, u32>,
}

impl DocumentBag {
    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn from_counts<'a>(counts: impl IntoIterator<Item = (&'a str, u32)>) -> Self {
        DocumentBag {
            counts: counts
                .into_iter()
                .filter(|&(_, c)| c > 0)
                .map(|(w, c)| (w.to_owned(), c))
                .collect(),
        }
    }
}

/// Lowercases, splits on runs of non-alphanumeric characters and counts.
pub fn tokenize(text: &str) -> DocumentBag {
    let mut counts = BTreeMap::new();
    for token in text.split(|c: char| !c.is_alphanumeric()) {
        if !token.is_empty() {
            *counts.entry(token.to_lowercase()).or_insert(0) += 1;
        }
    }
    DocumentBag { counts }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    /// Mean score over the lexicon words of the document, with multiplicity.
    #[default]
    WeightedAverage,
    /// `sᵀx / sᵀ1` with the lexicon-wide denominator.
    Literal,
}

/// Scores a document on one axis. `None` when the document contains no
/// lexicon word, and in literal mode also when the denominator `sᵀ1` is 0.
/// Words missing from the lexicon score zero.
pub fn score<T: Scalar>(doc: &DocumentBag, lex: &Lexicon<T>, mode: ScoreMode) -> Option<T> {
    let mut weighted = T::zero();
    let mut hits: u64 = 0;
    for (word, &count) in &doc.counts {
        if let Some(s) = lex.get(word) {
            weighted = weighted + s * T::from_u32(count)?;
            hits += u64::from(count);
        }
    }
    if hits == 0 {
        return None;
    }
    match mode {
        ScoreMode::WeightedAverage => Some(weighted / T::from_u64(hits)?),
        ScoreMode::Literal => {
            let denom = lex.score_sum();
            if denom == T::zero() {
                None
            } else {
                Some(weighted / denom)
            }
        }
    }
}

/// The four affect axes, in feature order.
pub const AXES: [&str; 4] = ["happiness", "arousal", "dominance", "polarity"];

#[derive(Debug, Clone)]
pub struct LexiconSet<T> {
    pub happiness: Lexicon<T>,
    pub arousal: Lexicon<T>,
    pub dominance: Lexicon<T>,
    pub polarity: Lexicon<T>,
}

impl<T: Scalar> LexiconSet<T> {
    pub fn axes(&self) -> [&Lexicon<T>; 4] {
        [&self.happiness, &self.arousal, &self.dominance, &self.polarity]
    }
}

/// Per-axis mean of the per-paragraph scores, skipping paragraphs without a
/// score; an axis with no scored paragraph is 0.
pub fn language_features<T: Scalar>(
    paragraphs: &[impl AsRef<str>],
    lexicons: &LexiconSet<T>,
    mode: ScoreMode,
) -> Result<[T; 4]> {
    if paragraphs.is_empty() {
        return Err(Error::Empty("language_features needs at least one paragraph".into()));
    }
    let bags: Vec<DocumentBag> = paragraphs.iter().map(|p| tokenize(p.as_ref())).collect();
    let mut out = [T::zero(); 4];
    for (slot, lex) in out.iter_mut().zip(lexicons.axes()) {
        let mut sum = T::zero();
        let mut n = 0usize;
        for bag in &bags {
            if let Some(s) = score(bag, lex, mode) {
                sum = sum + s;
                n += 1;
            }
        }
        if n > 0 {
            *slot = sum / T::from_count(n);
        }
    }
    Ok(out)
}
