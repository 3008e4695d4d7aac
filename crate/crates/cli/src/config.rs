//! The run configuration: one TOML file capturing every threshold, path and
//! seed of a run, with command-line flags layered on top.

use std::path::{Path, PathBuf};

use memewatch_core::features::{LabelThresholds, DEFAULT_HORIZONS};
use memewatch_core::learn::ModelSpec;
use memewatch_core::pipeline::EvalConfig;
use memewatch_core::sensors::SensorConfig;
use memewatch_core::sim::{CorpusMix, NetworkSpec};
use memewatch_core::textfeat::{ScoreMode, AXES};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Input and output locations. Unset inputs default to the file of the
/// same role inside `out_dir`, so the commands chain without extra flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub out_dir: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub trajectories: Option<PathBuf>,
    pub texts: Option<PathBuf>,
    pub lexicon_happiness: Option<PathBuf>,
    pub lexicon_arousal: Option<PathBuf>,
    pub lexicon_dominance: Option<PathBuf>,
    pub lexicon_polarity: Option<PathBuf>,
    pub sensors: Option<PathBuf>,
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub success_min: usize,
    pub failure_max: usize,
    pub early_frac: f64,
    pub avoid_threshold: usize,
    pub alpha: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        let labels = LabelThresholds::default();
        let sensors = SensorConfig::default();
        Thresholds {
            success_min: labels.success_min,
            failure_max: labels.failure_max,
            early_frac: sensors.early_frac,
            avoid_threshold: sensors.avoid_threshold,
            alpha: sensors.alpha,
        }
    }
}

/// Synthetic corpus: a network, a meme mix and a vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub n_memes: usize,
    pub vocab_size: usize,
    pub network: NetworkSpec,
    pub corpus: CorpusMix,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            n_memes: 1000,
            vocab_size: 200,
            network: NetworkSpec::default(),
            corpus: CorpusMix::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub k_folds: usize,
    pub n_permutations: usize,
    pub balance: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        let cfg = EvalConfig::default();
        EvalSection {
            k_folds: cfg.k_folds,
            n_permutations: cfg.n_permutations,
            balance: cfg.balance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub rng_seed: u64,
    pub horizons: Vec<f64>,
    pub score_mode: ScoreMode,
    pub paths: Paths,
    pub thresholds: Thresholds,
    /// Divide alpha by the number of sources tested.
    pub bonferroni: bool,
    pub simulate: SimulateConfig,
    pub model: ModelSpec,
    pub eval: EvalSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            rng_seed: 1,
            horizons: DEFAULT_HORIZONS.to_vec(),
            score_mode: ScoreMode::default(),
            paths: Paths::default(),
            thresholds: Thresholds::default(),
            bonferroni: false,
            simulate: SimulateConfig::default(),
            model: ModelSpec::default(),
            eval: EvalSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::missing(path, &e.to_string()))?;
        toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("config {}: {}", path.display(), e.message())).into())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.thresholds;
        if t.success_min <= t.failure_max {
            return Err(CliError::usage(format!(
                "success_min ({}) must exceed failure_max ({})",
                t.success_min, t.failure_max
            )));
        }
        if !(t.early_frac > 0.0 && t.early_frac < 1.0) {
            return Err(CliError::usage(format!("early_frac must be in (0, 1), got {}", t.early_frac)));
        }
        if !(t.alpha > 0.0 && t.alpha < 1.0) {
            return Err(CliError::usage(format!("alpha must be in (0, 1), got {}", t.alpha)));
        }
        if self.horizons.is_empty() || self.horizons.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(CliError::usage("horizons must be a non-empty list of positive hours"));
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.paths.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    fn input(&self, set: &Option<PathBuf>, default: &str) -> PathBuf {
        set.clone().unwrap_or_else(|| self.out_dir().join(default))
    }

    pub fn graph_path(&self) -> PathBuf {
        self.input(&self.paths.graph, "graph.tsv")
    }

    pub fn trajectories_path(&self) -> PathBuf {
        self.input(&self.paths.trajectories, "trajectories.jsonl")
    }

    pub fn texts_path(&self) -> PathBuf {
        self.input(&self.paths.texts, "texts.jsonl")
    }

    pub fn sensors_path(&self) -> PathBuf {
        self.input(&self.paths.sensors, "sensors.txt")
    }

    pub fn model_path(&self) -> PathBuf {
        self.input(&self.paths.model, "model.json")
    }

    /// Lexicon file of each axis, in feature order.
    pub fn lexicon_paths(&self) -> [(&'static str, PathBuf); 4] {
        let p = &self.paths;
        let set = [&p.lexicon_happiness, &p.lexicon_arousal, &p.lexicon_dominance, &p.lexicon_polarity];
        std::array::from_fn(|i| (AXES[i], self.input(set[i], &format!("lexicons/{}.tsv", AXES[i]))))
    }

    pub fn label_thresholds(&self) -> LabelThresholds {
        LabelThresholds {
            success_min: self.thresholds.success_min,
            failure_max: self.thresholds.failure_max,
        }
    }

    pub fn sensor_config(&self) -> SensorConfig {
        SensorConfig {
            early_frac: self.thresholds.early_frac,
            alpha: self.thresholds.alpha,
            avoid_threshold: self.thresholds.avoid_threshold,
            bonferroni: self.bonferroni,
            ..SensorConfig::default()
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            model: self.model.clone(),
            k_folds: self.eval.k_folds,
            n_permutations: self.eval.n_permutations,
            balance: self.eval.balance,
            rng_seed: self.rng_seed,
        }
    }

    /// File name of the feature matrix at horizon `tau`.
    pub fn features_file(&self, tau: f64) -> PathBuf {
        self.out_dir().join(format!("features_{tau}h.csv"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        cfg.validate().unwrap();
    }

    #[test]
    fn partial_file_keeps_other_defaults() {
        let cfg: RunConfig = toml::from_str("rng_seed = 7\n[thresholds]\nsuccess_min = 500\n").unwrap();
        assert_eq!(cfg.rng_seed, 7);
        assert_eq!(cfg.thresholds.success_min, 500);
        assert_eq!(cfg.thresholds.failure_max, 100);
        assert_eq!(cfg.horizons, vec![12.0, 24.0, 48.0, 120.0]);
    }

    #[test]
    fn invalid_thresholds_are_rejected() {
        let mut cfg = RunConfig::default();
        cfg.thresholds.failure_max = 1000;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.thresholds.early_frac = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.thresholds.alpha = 0.0;
        assert!(cfg.validate().is_err());
        assert!(toml::from_str::<RunConfig>("no_such_key = 1").is_err());
    }

    #[test]
    fn inputs_default_into_out_dir() {
        let mut cfg = RunConfig::default();
        cfg.paths.out_dir = Some("run".into());
        cfg.paths.model = Some("elsewhere/m.json".into());
        assert_eq!(cfg.graph_path(), PathBuf::from("run/graph.tsv"));
        assert_eq!(cfg.model_path(), PathBuf::from("elsewhere/m.json"));
        assert_eq!(cfg.lexicon_paths()[3].1, PathBuf::from("run/lexicons/polarity.tsv"));
        assert_eq!(cfg.features_file(12.0), PathBuf::from("run/features_12h.csv"));
    }
}
