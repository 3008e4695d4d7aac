//! Corpus-level glue: the feature matrix at a horizon, and the per-horizon
//! accuracy / top-feature report.

use std::collections::BTreeMap;
use std::io::Write;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract, FeatureVector, LabelThresholds, MemeLabel, MemeText, MemeTrajectory, NetworkContext};
use crate::learn::{cross_validate, cv_permutation_importance, Dataset, Importance, ModelSpec};
use crate::textfeat::{language_features, LexiconSet, ScoreMode};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Language features per meme id. Memes without text get zeros.
pub fn language_table(
    trajectories: &[MemeTrajectory],
    texts: &[MemeText],
    lexicons: &LexiconSet<f64>,
    mode: ScoreMode,
) -> Result<BTreeMap<String, [f64; 4]>> {
    let by_id: BTreeMap<&str, &MemeText> = texts.iter().map(|t| (t.meme_id.as_str(), t)).collect();
    let missing = trajectories.iter().filter(|t| !by_id.contains_key(t.meme_id.as_str())).count();
    if missing > 0 {
        warn!("{missing} memes have no text; their language features are 0");
    }
    trajectories
        .par_iter()
        .map(|t| {
            let values = match by_id.get(t.meme_id.as_str()) {
                Some(text) if !text.paragraphs.is_empty() => language_features(&text.paragraphs, lexicons, mode)?,
                _ => [0.0; 4],
            };
            Ok((t.meme_id.clone(), values))
        })
        .collect()
}

/// Feature vectors of every meme at horizon `tau`, in corpus order.
pub fn feature_matrix(
    trajectories: &[MemeTrajectory],
    language: &BTreeMap<String, [f64; 4]>,
    network: &NetworkContext,
    tau: f64,
    thresholds: &LabelThresholds,
) -> Result<Vec<FeatureVector<f64>>> {
    trajectories
        .par_iter()
        .map(|t| {
            let lang = language.get(&t.meme_id).copied().unwrap_or([0.0; 4]);
            extract(t, tau, network, lang, thresholds)
        })
        .collect()
}

/// One row of the horizon report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonRow {
    pub tau_hours: f64,
    /// τ as a percentage of the median lifespan of the evaluated memes.
    pub pct_lifespan: f64,
    pub accuracy: f64,
    pub n_memes: usize,
    /// Features ranked by held-out permutation importance.
    pub ranking: Vec<Importance>,
}

impl HorizonRow {
    pub fn top_features(&self, n: usize) -> Vec<&str> {
        self.ranking.iter().take(n).map(|i| i.feature.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub model: ModelSpec,
    pub k_folds: usize,
    pub n_permutations: usize,
    /// Downsample the majority class before evaluating.
    pub balance: bool,
    pub rng_seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            model: ModelSpec::default(),
            k_folds: 10,
            n_permutations: crate::learn::DEFAULT_PERMUTATIONS,
            balance: true,
            rng_seed: 1,
        }
    }
}

/// The dataset used for evaluation: excluded memes dropped, optionally balanced.
pub fn evaluation_dataset(rows: &[FeatureVector<f64>], cfg: &EvalConfig) -> Result<Dataset<f64>> {
    let data = Dataset::from_features(rows)?;
    if cfg.balance {
        data.balanced(cfg.rng_seed)
    } else {
        Ok(data)
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let mid = xs.len() / 2;
    if xs.len().is_multiple_of(2) {
        (xs[mid - 1] + xs[mid]) / 2.0
    } else {
        xs[mid]
    }
}

/// Cross-validated accuracy and feature ranking at one horizon.
pub fn evaluate_horizon(
    rows: &[FeatureVector<f64>],
    trajectories: &[MemeTrajectory],
    cfg: &EvalConfig,
) -> Result<HorizonRow> {
    let tau = rows
        .first()
        .map(|r| r.tau_hours)
        .ok_or_else(|| Error::Empty("no feature rows to evaluate".into()))?;
    let data = evaluation_dataset(rows, cfg)?;
    let lifespans: BTreeMap<&str, f64> = trajectories.iter().map(|t| (t.meme_id.as_str(), t.lifespan())).collect();
    let spans: Vec<f64> = data.ids.iter().filter_map(|id| lifespans.get(id.as_str()).copied()).collect();
    let med = if spans.is_empty() { 0.0 } else { median(spans) };
    let cv = cross_validate(&data, &cfg.model, cfg.k_folds, cfg.rng_seed)?;
    let ranking = cv_permutation_importance(&data, &cfg.model, cfg.k_folds, cfg.n_permutations, cfg.rng_seed)?;
    Ok(HorizonRow {
        tau_hours: tau,
        pct_lifespan: if med > 0.0 { 100.0 * tau / med } else { 0.0 },
        accuracy: cv.accuracy,
        n_memes: data.n_rows(),
        ranking,
    })
}

/// The table: `tau_hours, pct_lifespan, accuracy, n_memes, feature_1..3`.
pub fn write_report_csv(rows: &[HorizonRow], mut out: impl Write) -> Result<()> {
    let io = |e| Error::io("<output>", e);
    writeln!(out, "# memewatch report schema_version={REPORT_SCHEMA_VERSION}").map_err(io)?;
    writeln!(out, "tau_hours,pct_lifespan,accuracy,n_memes,feature_1,feature_2,feature_3").map_err(io)?;
    for r in rows {
        let top = r.top_features(3);
        let cell = |i: usize| top.get(i).copied().unwrap_or("");
        writeln!(
            out,
            "{},{:.1},{:.4},{},{},{},{}",
            r.tau_hours,
            r.pct_lifespan,
            r.accuracy,
            r.n_memes,
            cell(0),
            cell(1),
            cell(2)
        )
        .map_err(io)?;
    }
    Ok(())
}

/// Label counts of a feature matrix: `(successful, unsuccessful, excluded)`.
pub fn label_counts(rows: &[FeatureVector<f64>]) -> (usize, usize, usize) {
    let count = |l: MemeLabel| rows.iter().filter(|r| r.label == l).count();
    (count(MemeLabel::Successful), count(MemeLabel::Unsuccessful), count(MemeLabel::Excluded))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{CommunityMap, Event, ShellMap};
    use crate::learn::ModelKind;

    #[test]
    fn report_layout() {
        let row = HorizonRow {
            tau_hours: 12.0,
            pct_lifespan: 4.26,
            accuracy: 0.835,
            n_memes: 200,
            ranking: ["community_dispersion", "n_posts", "post_rate", "happiness"]
                .iter()
                .map(|f| Importance { feature: f.to_string(), importance: 0.1 })
                .collect(),
        };
        let mut buf = Vec::new();
        write_report_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().nth(2).unwrap(),
            "12,4.3,0.8350,200,community_dispersion,n_posts,post_rate"
        );
    }

    #[test]
    fn matrix_has_no_gaps_and_separable_corpus_evaluates() {
        // 40 big memes and 40 small ones; big memes touch many communities early
        let mut trajectories = Vec::new();
        for m in 0..80 {
            let big = m % 2 == 0;
            let n = if big { 1200 } else { 20 };
            let events = (0..n)
                .map(|i| Event(i as f64 * 0.05 + (m % 3) as f64 * 0.01 * i as f64, format!("s{}", (i * 7 + m) % 500)))
                .collect();
            trajectories.push(MemeTrajectory::new(format!("m{m:02}"), events).unwrap());
        }
        let network = NetworkContext {
            communities: CommunityMap::from_pairs((0..500).map(|i| (format!("s{i}"), i % 10))),
            shells: ShellMap::from_pairs((0..500).map(|i| (format!("s{i}"), u32::from(i < 20)))),
            sensors: Default::default(),
        };
        let language = language_table(&trajectories, &[], &crate::sim::SyntheticLanguage::new(20, 1).unwrap().lexicons, ScoreMode::WeightedAverage).unwrap();
        let rows = feature_matrix(&trajectories, &language, &network, 12.0, &LabelThresholds::default()).unwrap();
        assert_eq!(rows.len(), 80);
        assert!(rows.iter().all(|r| r.values().iter().all(|v| v.is_finite())));
        assert_eq!(label_counts(&rows), (40, 40, 0));
        let cfg = EvalConfig {
            model: ModelSpec { kind: ModelKind::TreeEnsemble, n_trees: 10, ..ModelSpec::default() },
            k_folds: 5,
            n_permutations: 3,
            ..EvalConfig::default()
        };
        let row = evaluate_horizon(&rows, &trajectories, &cfg).unwrap();
        assert!(row.accuracy >= 0.95);
        assert_eq!(row.ranking.len(), 9);
    }
}
