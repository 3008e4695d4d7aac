//! Synthetic networks, cascades and corpora with known ground truth.

mod cascade;
mod corpus;
mod network;
mod text;

pub use cascade::{simulate_cascade, CascadeSpec, SeedStrategy, Substrate};
pub use corpus::{generate_corpus, meme_id, CorpusMix, GeneratedMeme, MemeParams, SizeSummary};
pub use network::{generate_network, NetworkSpec, SyntheticNetwork};
pub use text::{write_lexicon_tsv, SyntheticLanguage};
