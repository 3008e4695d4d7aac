//! Synthetic vocabulary, lexicons and paragraphs for simulated memes.
//!
//! Words are `w000`, `w001`, …; a subset carries affect scores on a 1–9 scale
//! and a smaller subset carries ±1 polarity. A meme's `appeal` in [0, 1]
//! tilts its paragraphs toward high-happiness, positive words with strength
//! `signal`, giving the language features a weak, tunable link to success.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{substream, StreamRng};
use crate::textfeat::{Lexicon, LexiconSet};

#[derive(Debug, Clone)]
pub struct SyntheticLanguage {
    pub words: Vec<String>,
    pub lexicons: LexiconSet<f64>,
    /// Words with high happiness and positive polarity.
    upbeat: Vec<usize>,
}

impl SyntheticLanguage {
    pub fn new(vocab_size: usize, seed: u64) -> Result<Self> {
        if vocab_size < 10 {
            return Err(Error::InvalidParameter("vocab_size must be >= 10".into()));
        }
        let width = (vocab_size - 1).to_string().len().max(3);
        let words: Vec<String> = (0..vocab_size).map(|i| format!("w{i:0width$}")).collect();
        let mut rng = substream(seed, "language/lexicon", 0);
        let affect_words = vocab_size * 3 / 5;
        let polar_words = vocab_size * 3 / 10;
        let mut axes: [BTreeMap<String, f64>; 3] = Default::default();
        let mut polarity = BTreeMap::new();
        let mut upbeat = Vec::new();
        for (i, w) in words.iter().enumerate().take(affect_words) {
            let mut happy = 0.0;
            for (a, axis) in axes.iter_mut().enumerate() {
                // Quantized to 0.01 so lexicon files round-trip exactly.
                let s = (100.0 + rng.random_range(0..=800) as f64) / 100.0;
                axis.insert(w.clone(), s);
                if a == 0 {
                    happy = s;
                }
            }
            if i < polar_words {
                let p = if happy >= 5.0 { 1.0 } else { -1.0 };
                polarity.insert(w.clone(), p);
                if p > 0.0 {
                    upbeat.push(i);
                }
            }
        }
        let [happiness, arousal, dominance] = axes;
        let lexicons = LexiconSet {
            happiness: Lexicon::new("happiness", happiness)?,
            arousal: Lexicon::new("arousal", arousal)?,
            dominance: Lexicon::new("dominance", dominance)?,
            polarity: Lexicon::new("polarity", polarity)?,
        };
        Ok(SyntheticLanguage {
            words,
            lexicons,
            upbeat,
        })
    }

    /// `n` paragraphs of 20–40 words each.
    pub fn paragraphs(&self, rng: &mut StreamRng, appeal: f64, signal: f64, n: usize) -> Vec<String> {
        let tilt = (appeal * signal).clamp(0.0, 1.0);
        (0..n)
            .map(|_| {
                let len = rng.random_range(20..=40);
                let mut words = Vec::with_capacity(len);
                for _ in 0..len {
                    let i = if !self.upbeat.is_empty() && rng.random::<f64>() < tilt {
                        self.upbeat[rng.random_range(0..self.upbeat.len())]
                    } else {
                        rng.random_range(0..self.words.len())
                    };
                    words.push(self.words[i].as_str());
                }
                words.join(" ")
            })
            .collect()
    }
}

/// Writes a lexicon as `word<TAB>score` lines.
pub fn write_lexicon_tsv(lex: &Lexicon<f64>, mut out: impl Write) -> Result<()> {
    let io = |e| Error::io("<output>", e);
    writeln!(out, "# {} lexicon schema_version=1", lex.axis_name).map_err(io)?;
    for (w, s) in lex.iter() {
        writeln!(out, "{w}\t{s}").map_err(io)?;
    }
    Ok(())
}
