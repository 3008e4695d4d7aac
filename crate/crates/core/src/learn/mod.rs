//! Classifiers over feature vectors: Gaussian naive Bayes and a bagged
//! decision-tree ensemble, with stratified cross-validation and permutation
//! importance.

mod cv;
mod nb;
mod tree;

use std::io::Write;
use std::path::Path;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, MemeLabel, FEATURE_NAMES};
use crate::rng::substream;
use crate::scalar::Real;

pub use cv::{
    cross_validate, cv_permutation_importance, permutation_importance, stratified_folds,
    write_cv_csv, CvResult, Importance, DEFAULT_PERMUTATIONS,
};
pub use nb::GaussianNb;
pub use tree::{Ensemble, Node, Tree};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Feature rows with binary labels (`true` = successful).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub feature_names: Vec<String>,
    pub ids: Vec<String>,
    pub x: Vec<Vec<T>>,
    pub y: Vec<bool>,
}

impl<T: Real> Dataset<T> {
    pub fn new(feature_names: Vec<String>, ids: Vec<String>, x: Vec<Vec<T>>, y: Vec<bool>) -> Result<Self> {
        if x.len() != y.len() || x.len() != ids.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len().min(ids.len()),
            });
        }
        for row in &x {
            if row.len() != feature_names.len() {
                return Err(Error::DimensionMismatch {
                    expected: feature_names.len(),
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("feature values must be finite".into()));
            }
        }
        Ok(Dataset {
            feature_names,
            ids,
            x,
            y,
        })
    }

    /// Rows of the given feature vectors, dropping excluded memes.
    pub fn from_features(rows: &[FeatureVector<T>]) -> Result<Self> {
        let kept: Vec<&FeatureVector<T>> = rows.iter().filter(|r| r.label != MemeLabel::Excluded).collect();
        Dataset::new(
            FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            kept.iter().map(|r| r.meme_id.clone()).collect(),
            kept.iter().map(|r| r.values().to_vec()).collect(),
            kept.iter().map(|r| r.label == MemeLabel::Successful).collect(),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// `[unsuccessful, successful]` row counts.
    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.y.iter().filter(|&&y| y).count();
        [self.y.len() - pos, pos]
    }

    pub fn require_both_classes(&self) -> Result<()> {
        if self.class_counts().contains(&0) {
            return Err(Error::SingleClass);
        }
        Ok(())
    }

    pub fn subset(&self, rows: &[usize]) -> Self {
        Dataset {
            feature_names: self.feature_names.clone(),
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            x: rows.iter().map(|&i| self.x[i].clone()).collect(),
            y: rows.iter().map(|&i| self.y[i]).collect(),
        }
    }

    /// Keeps only the named columns, in the given order.
    pub fn select(&self, names: &[&str]) -> Result<Self> {
        let cols = names
            .iter()
            .map(|n| {
                self.feature_names
                    .iter()
                    .position(|f| f == n)
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown feature {n:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            feature_names: names.iter().map(|s| s.to_string()).collect(),
            ids: self.ids.clone(),
            x: self.x.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect(),
            y: self.y.clone(),
        })
    }

    /// Downsamples the majority class to the minority count, keeping row
    /// order; mirrors an equal-sized successful/unsuccessful sample.
    pub fn balanced(&self, seed: u64) -> Result<Self> {
        self.require_both_classes()?;
        let [neg, pos] = self.class_counts();
        let keep_n = neg.min(pos);
        let mut rng = substream(seed, "dataset/balance", 0);
        let mut keep = vec![false; self.n_rows()];
        for class in [false, true] {
            let members: Vec<usize> = (0..self.n_rows()).filter(|&i| self.y[i] == class).collect();
            for j in sample(&mut rng, members.len(), keep_n) {
                keep[members[j]] = true;
            }
        }
        let rows: Vec<usize> = (0..self.n_rows()).filter(|&i| keep[i]).collect();
        Ok(self.subset(&rows))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    NaiveBayes,
    TreeEnsemble,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive_bayes" | "nb" => Ok(ModelKind::NaiveBayes),
            "tree_ensemble" | "ensemble" => Ok(ModelKind::TreeEnsemble),
            other => Err(Error::InvalidParameter(format!(
                "unknown model kind {other:?} (expected naive_bayes or tree_ensemble)"
            ))),
        }
    }
}

/// Everything needed to fit a model, apart from the data and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    /// Fit each tree on a bootstrap resample (otherwise on the full data).
    pub bootstrap: bool,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            kind: ModelKind::TreeEnsemble,
            n_trees: 100,
            max_depth: None,
            bootstrap: true,
        }
    }
}

/// A fitted model that scores rows: the probability-like score of success.
pub trait Classifier<T> {
    fn score(&self, x: &[T]) -> T;

    /// Successful iff the score exceeds one half.
    fn predict_label(&self, x: &[T]) -> bool
    where
        T: Real,
    {
        self.score(x) > T::lit(0.5)
    }
}

/// Something that fits a [`Classifier`] to a dataset.
pub trait Learner<T> {
    type Model: Classifier<T> + Send + Sync;
    fn fit(&self, data: &Dataset<T>, seed: u64) -> Result<Self::Model>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "T: Real")]
pub enum ModelParams<T> {
    NaiveBayes(GaussianNb<T>),
    TreeEnsemble(Ensemble<T>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub rng_seed: u64,
    pub hyperparameters: ModelSpec,
    pub n_rows: usize,
    /// `[unsuccessful, successful]`.
    pub class_counts: [usize; 2],
    pub cv_accuracy: Option<f64>,
    pub cv_folds: Option<usize>,
    pub tau_hours: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TrainedModel<T> {
    pub schema_version: u32,
    pub kind: ModelKind,
    pub feature_names: Vec<String>,
    pub params: ModelParams<T>,
    pub metadata: TrainingMetadata,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Prediction<T> {
    pub label: MemeLabel,
    pub score: T,
}

impl<T: Real> Classifier<T> for TrainedModel<T> {
    fn score(&self, x: &[T]) -> T {
        match &self.params {
            ModelParams::NaiveBayes(m) => m.score(x),
            ModelParams::TreeEnsemble(m) => m.score(x),
        }
    }
}

impl<T: Real> TrainedModel<T> {
    pub fn predict(&self, x: &[T]) -> Result<Prediction<T>> {
        if x.len() != self.feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_names.len(),
                got: x.len(),
            });
        }
        let score = self.score(x);
        let label = if score > T::lit(0.5) {
            MemeLabel::Successful
        } else {
            MemeLabel::Unsuccessful
        };
        Ok(Prediction { label, score })
    }

    pub fn write_json(&self, mut out: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        let found = raw.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if found != MODEL_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found,
                expected: MODEL_SCHEMA_VERSION,
            });
        }
        let model: Self = serde_json::from_value(raw)?;
        let consistent = match &model.params {
            ModelParams::NaiveBayes(nb) => model.kind == ModelKind::NaiveBayes && nb.n_features() == model.feature_names.len(),
            ModelParams::TreeEnsemble(e) => {
                model.kind == ModelKind::TreeEnsemble && e.max_feature_index().is_none_or(|f| f < model.feature_names.len())
            }
        };
        if !consistent {
            return Err(Error::InvalidParameter("model parameters do not match its kind or feature list".into()));
        }
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

impl<T: Real> Learner<T> for ModelSpec {
    type Model = TrainedModel<T>;

    fn fit(&self, data: &Dataset<T>, seed: u64) -> Result<TrainedModel<T>> {
        data.require_both_classes()?;
        let params = match self.kind {
            ModelKind::NaiveBayes => ModelParams::NaiveBayes(GaussianNb::fit(data)?),
            ModelKind::TreeEnsemble => ModelParams::TreeEnsemble(Ensemble::fit(data, self, seed)?),
        };
        Ok(TrainedModel {
            schema_version: MODEL_SCHEMA_VERSION,
            kind: self.kind,
            feature_names: data.feature_names.clone(),
            params,
            metadata: TrainingMetadata {
                rng_seed: seed,
                hyperparameters: self.clone(),
                n_rows: data.n_rows(),
                class_counts: data.class_counts(),
                cv_accuracy: None,
                cv_folds: None,
                tau_hours: None,
            },
        })
    }
}

pub fn train_nb<T: Real>(data: &Dataset<T>) -> Result<TrainedModel<T>> {
    ModelSpec {
        kind: ModelKind::NaiveBayes,
        ..ModelSpec::default()
    }
    .fit(data, 0)
}

pub fn train_ensemble<T: Real>(
    data: &Dataset<T>,
    n_trees: usize,
    max_depth: Option<usize>,
    rng_seed: u64,
) -> Result<TrainedModel<T>> {
    ModelSpec {
        kind: ModelKind::TreeEnsemble,
        n_trees,
        max_depth,
        bootstrap: true,
    }
    .fit(data, rng_seed)
}

/// Fraction of rows whose predicted label matches.
pub fn accuracy<T: Real>(model: &impl Classifier<T>, data: &Dataset<T>) -> f64 {
    if data.n_rows() == 0 {
        return 0.0;
    }
    let hits = data
        .x
        .iter()
        .zip(&data.y)
        .filter(|(x, &y)| model.predict_label(x) == y)
        .count();
    hits as f64 / data.n_rows() as f64
}


#[cfg(test)]
mod tests {
    use super::testdata::*;
    use super::*;

    #[test]
    fn dataset_validation_and_balance() {
        assert!(Dataset::new(names(2), vec!["a".into()], vec![vec![1.0]], vec![true]).is_err());
        assert!(Dataset::new(names(1), vec!["a".into()], vec![vec![f64::NAN]], vec![true]).is_err());
        let d = Dataset::new(
            names(1),
            (0..5).map(|i| i.to_string()).collect(),
            (0..5).map(|i| vec![i as f64]).collect(),
            vec![true, false, false, false, true],
        )
        .unwrap();
        assert_eq!(d.class_counts(), [3, 2]);
        let b = d.balanced(1).unwrap();
        assert_eq!(b.class_counts(), [2, 2]);
        assert_eq!(b.balanced(1).unwrap(), b);
        let single = d.subset(&[1, 2]);
        assert!(matches!(train_nb(&single), Err(Error::SingleClass)));
        assert!(matches!(train_ensemble(&single, 3, None, 1), Err(Error::SingleClass)));
    }

    #[test]
    fn model_json_round_trip_and_flat_reevaluation() {
        let data = gaussians(60, 2.0, 3, 4);
        for spec in [
            ModelSpec { kind: ModelKind::NaiveBayes, ..ModelSpec::default() },
            ModelSpec { n_trees: 15, ..ModelSpec::default() },
        ] {
            let model: TrainedModel<f64> = spec.fit(&data, 7).unwrap();
            let mut buf = Vec::new();
            model.write_json(&mut buf).unwrap();
            let text = String::from_utf8(buf).unwrap();
            let back = TrainedModel::<f64>::from_json(&text).unwrap();
            assert_eq!(back, model);
            let raw: serde_json::Value = serde_json::from_str(&text).unwrap();
            for row in &data.x {
                let flat = flat_score(&raw, row);
                assert!((flat - back.predict(row).unwrap().score).abs() < 1e-12);
            }
            assert!(matches!(model.predict(&[1.0]), Err(Error::DimensionMismatch { expected: 3, got: 1 })));
            let bumped = text.replace("\"schema_version\": 1", "\"schema_version\": 2");
            assert!(matches!(TrainedModel::<f64>::from_json(&bumped), Err(Error::SchemaVersion { found: 2, .. })));
        }
    }

    /// Scores a serialized model straight from its JSON, independently of
    /// the typed model code.
    fn flat_score(raw: &serde_json::Value, x: &[f64]) -> f64 {
        let params = &raw["params"];
        if let Some(nb) = params.get("naive_bayes") {
            let mut log_post = [0.0f64; 2];
            for (c, lp) in log_post.iter_mut().enumerate() {
                *lp = nb["log_priors"][c].as_f64().unwrap();
                for (j, &v) in x.iter().enumerate() {
                    let mu = nb["means"][c][j].as_f64().unwrap();
                    let var = nb["variances"][c][j].as_f64().unwrap();
                    *lp += -0.5 * (std::f64::consts::TAU * var).ln() - (v - mu).powi(2) / (2.0 * var);
                }
            }
            1.0 / (1.0 + (log_post[0] - log_post[1]).exp())
        } else {
            let trees = params["tree_ensemble"]["trees"].as_array().unwrap();
            let votes = trees
                .iter()
                .filter(|t| {
                    let nodes = t["nodes"].as_array().unwrap();
                    let mut i = 0usize;
                    loop {
                        let node = &nodes[i];
                        if let Some(leaf) = node.get("leaf") {
                            return leaf["successful"].as_bool().unwrap();
                        }
                        let s = &node["split"];
                        let f = s["feature"].as_u64().unwrap() as usize;
                        i = if x[f] <= s["threshold"].as_f64().unwrap() {
                            s["left"].as_u64().unwrap() as usize
                        } else {
                            s["right"].as_u64().unwrap() as usize
                        };
                    }
                })
                .count();
            votes as f64 / trees.len() as f64
        }
    }

    #[test]
    fn model_kind_parsing() {
        assert_eq!("nb".parse::<ModelKind>().unwrap(), ModelKind::NaiveBayes);
        assert_eq!("tree_ensemble".parse::<ModelKind>().unwrap(), ModelKind::TreeEnsemble);
        assert!("svm".parse::<ModelKind>().is_err());
    }
}
