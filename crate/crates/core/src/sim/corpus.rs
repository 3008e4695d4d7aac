//! Mixed corpora of simulated memes.
//!
//! Each meme draws its own transmission probability, seeding strategy and
//! seed count, so a single network yields everything from seed-only flops to
//! network-wide cascades. `transmit_skew > 1` concentrates probabilities near
//! the low end, giving the right-skewed size distribution of real corpora.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cascade::{simulate_cascade, CascadeSpec, SeedStrategy, Substrate};
use super::text::SyntheticLanguage;
use crate::error::{Error, Result};
use crate::features::{MemeText, MemeTrajectory};
use crate::rng::{derive_seed, substream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusMix {
    /// Inclusive range of per-meme transmission probabilities.
    pub transmit_prob: [f64; 2],
    /// Exponent applied to the uniform draw; larger means more small memes.
    pub transmit_skew: f64,
    pub strategies: Vec<SeedStrategy>,
    /// Inclusive range of seed counts.
    pub n_seeds: [usize; 2],
    pub dt_hours: f64,
    /// How strongly a meme's appeal shows in its text, in [0, 1].
    pub language_signal: f64,
    pub paragraphs_per_meme: usize,
    pub rng_seed: u64,
}

impl Default for CorpusMix {
    fn default() -> Self {
        CorpusMix {
            transmit_prob: [0.01, 0.2],
            transmit_skew: 4.0,
            strategies: SeedStrategy::ALL.to_vec(),
            n_seeds: [1, 6],
            dt_hours: 6.0,
            language_signal: 0.1,
            paragraphs_per_meme: 10,
            rng_seed: 1,
        }
    }
}

impl CorpusMix {
    /// Companion of [`NetworkSpec::seeding_driven`](super::NetworkSpec::seeding_driven):
    /// a fixed seed count and a narrow band of transmission probabilities,
    /// so memes differ mainly in where their seeds land.
    pub fn seeding_driven() -> Self {
        CorpusMix {
            transmit_prob: [0.10, 0.16],
            transmit_skew: 1.0,
            n_seeds: [5, 5],
            language_signal: 0.05,
            ..CorpusMix::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_owned()));
        let [lo, hi] = self.transmit_prob;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return bad("transmit_prob must be a range within [0, 1]");
        }
        if !(self.transmit_skew > 0.0) {
            return bad("transmit_skew must be positive");
        }
        if self.strategies.is_empty() {
            return bad("at least one seed strategy is required");
        }
        if self.n_seeds[0] < 1 || self.n_seeds[0] > self.n_seeds[1] {
            return bad("n_seeds must be a range with lower bound >= 1");
        }
        if !(0.0..=1.0).contains(&self.language_signal) {
            return bad("language_signal must be in [0, 1]");
        }
        if self.paragraphs_per_meme < 1 {
            return bad("paragraphs_per_meme must be >= 1");
        }
        Ok(())
    }
}

/// The generation parameters of one meme, kept for oracle use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemeParams {
    pub meme_id: String,
    pub cascade: CascadeSpec,
    /// Position of `transmit_prob` within the mix range, in [0, 1].
    pub appeal: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedMeme {
    pub trajectory: MemeTrajectory,
    pub text: MemeText,
    pub params: MemeParams,
}

pub fn meme_id(i: usize) -> String {
    format!("meme{i:05}")
}

pub fn generate_corpus(
    n_memes: usize,
    substrate: &Substrate<'_>,
    language: &SyntheticLanguage,
    mix: &CorpusMix,
) -> Result<Vec<GeneratedMeme>> {
    if n_memes < 1 {
        return Err(Error::InvalidParameter("n_memes must be >= 1".into()));
    }
    mix.validate()?;
    (0..n_memes)
        .into_par_iter()
        .map(|i| {
            let id = meme_id(i);
            let mut rng = substream(mix.rng_seed, "corpus/params", i as u64);
            let appeal = rng.random::<f64>().powf(mix.transmit_skew);
            let [lo, hi] = mix.transmit_prob;
            let cascade = CascadeSpec {
                transmit_prob: lo + (hi - lo) * appeal,
                n_seeds: rng.random_range(mix.n_seeds[0]..=mix.n_seeds[1]),
                seed_strategy: mix.strategies[rng.random_range(0..mix.strategies.len())],
                dt_hours: mix.dt_hours,
                rng_seed: derive_seed(mix.rng_seed, "corpus/cascade", i as u64),
            };
            let trajectory = simulate_cascade(substrate, &cascade, &id)?;
            let mut text_rng = substream(mix.rng_seed, "corpus/text", i as u64);
            let paragraphs = language.paragraphs(
                &mut text_rng,
                appeal,
                mix.language_signal,
                mix.paragraphs_per_meme,
            );
            Ok(GeneratedMeme {
                trajectory,
                text: MemeText {
                    meme_id: id.clone(),
                    paragraphs,
                },
                params: MemeParams {
                    meme_id: id,
                    cascade,
                    appeal,
                },
            })
        })
        .collect()
}

/// Shape of a corpus's final-size distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n_memes: usize,
    pub mean: f64,
    pub median: f64,
    pub max: usize,
    /// Population (moment) skewness.
    pub skewness: f64,
    pub max_over_median: f64,
}

impl SizeSummary {
    pub fn of(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::Empty("size summary of an empty corpus".into()));
        }
        let n = sizes.len() as f64;
        let xs: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
        let mean = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
        let skewness = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };
        let mut sorted = xs;
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len().is_multiple_of(2) {
            (sorted[mid - 1] + sorted[mid]) / 2.0
        } else {
            sorted[mid]
        };
        let max = sizes.iter().copied().max().unwrap_or(0);
        Ok(SizeSummary {
            n_memes: sizes.len(),
            mean,
            median,
            max,
            skewness,
            max_over_median: max as f64 / median,
        })
    }
}
