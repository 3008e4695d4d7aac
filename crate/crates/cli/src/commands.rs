//! One function per subcommand. Each reads its inputs, runs the library,
//! writes its outputs atomically and returns a one-line summary.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use log::{info, warn};
use memewatch_core::features::{
    label, read_feature_csv, read_texts_jsonl, read_trajectories_jsonl, timing_table, write_feature_csv,
    write_texts_jsonl, write_timing_csv, write_trajectories_jsonl, MemeLabel, MemeTrajectory, NetworkContext,
    FEATURE_NAMES, FEATURE_SCHEMA_VERSION,
};
use memewatch_core::graph::{detect_communities, k_shell_decompose, load_graph, write_edge_list, Graph, KShellIndex};
use memewatch_core::learn::{cross_validate, cv_permutation_importance, write_cv_csv, Learner};
use memewatch_core::pipeline::{evaluate_horizon, evaluation_dataset, feature_matrix, language_table, label_counts, write_report_csv};
use memewatch_core::rng::derive_seed;
use memewatch_core::sensors::{discover_sensors, read_sensor_list, write_sensor_csv, write_sensor_list, CoreSummary, SENSOR_SCHEMA_VERSION};
use memewatch_core::sim::{generate_corpus, generate_network, write_lexicon_tsv, SizeSummary, Substrate, SyntheticLanguage, SyntheticNetwork};
use memewatch_core::textfeat::LexiconSet;
use memewatch_core::graph::DEFAULT_MIN_GAIN;
use memewatch_core::{Features, Lexicon, Partition, SensorReport, TrainedModel};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{write_atomic, write_json};
use crate::CliError;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Fails with a `missing-input` error naming the file and its role.
fn require(path: &Path, what: &str) -> anyhow::Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::missing(path, what).into())
    }
}

fn load_input_graph(cfg: &RunConfig) -> anyhow::Result<Graph> {
    let path = cfg.graph_path();
    require(&path, "graph edge list (--graph)")?;
    let loaded = load_graph(&path)?;
    if loaded.graph.n_edges() == 0 {
        return Err(CliError::data(format!("{} contains no edges", path.display())).into());
    }
    Ok(loaded.graph)
}

fn load_trajectories(cfg: &RunConfig) -> anyhow::Result<Vec<MemeTrajectory>> {
    let path = cfg.trajectories_path();
    require(&path, "trajectories JSONL (--trajectories)")?;
    let trajectories = read_trajectories_jsonl(&path)?;
    if trajectories.is_empty() {
        return Err(CliError::data(format!("{} holds no trajectories", path.display())).into());
    }
    Ok(trajectories)
}

fn decompose_graph(g: &Graph) -> anyhow::Result<(Partition, KShellIndex)> {
    let partition = detect_communities(g, DEFAULT_MIN_GAIN)?;
    let shells = k_shell_decompose(g);
    Ok((partition, shells))
}

fn network_seeded(cfg: &RunConfig) -> anyhow::Result<SyntheticNetwork> {
    let mut spec = cfg.simulate.network.clone();
    spec.seed = derive_seed(cfg.rng_seed, "cli/network", 0);
    Ok(generate_network(&spec)?)
}

#[derive(Serialize)]
struct NetworkManifest<'a> {
    schema_version: u32,
    rng_seed: u64,
    spec: &'a memewatch_core::sim::NetworkSpec,
    n_vertices: usize,
    n_edges: usize,
    n_core: usize,
}

fn write_network(cfg: &RunConfig, net: &SyntheticNetwork) -> anyhow::Result<()> {
    let dir = cfg.out_dir();
    write_atomic(&dir.join("graph.tsv"), |o| Ok(write_edge_list(&net.graph, o)?))?;
    write_atomic(&dir.join("planted.csv"), |o| {
        writeln!(o, "# memewatch planted schema_version={MANIFEST_SCHEMA_VERSION}")?;
        writeln!(o, "vertex,block,core")?;
        let mut is_core = vec![false; net.graph.n_vertices()];
        for &c in &net.core {
            is_core[c as usize] = true;
        }
        for v in net.graph.vertices() {
            writeln!(o, "{},{},{}", net.graph.id(v), net.block[v as usize], u8::from(is_core[v as usize]))?;
        }
        Ok(())
    })?;
    write_json(
        &dir.join("network.json"),
        &NetworkManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            rng_seed: cfg.rng_seed,
            spec: &net.spec,
            n_vertices: net.graph.n_vertices(),
            n_edges: net.graph.n_edges(),
            n_core: net.core.len(),
        },
    )
}

pub fn gen(cfg: &RunConfig) -> anyhow::Result<String> {
    let net = network_seeded(cfg)?;
    write_network(cfg, &net)?;
    Ok(format!(
        "network: {} vertices, {} edges -> {}",
        net.graph.n_vertices(),
        net.graph.n_edges(),
        cfg.out_dir().join("graph.tsv").display()
    ))
}

#[derive(Serialize)]
struct LabelSummary {
    successful: usize,
    unsuccessful: usize,
    excluded: usize,
}

#[derive(Serialize)]
struct CorpusManifest<'a> {
    schema_version: u32,
    rng_seed: u64,
    n_memes: usize,
    network: &'a memewatch_core::sim::NetworkSpec,
    corpus: &'a memewatch_core::sim::CorpusMix,
    vocab_size: usize,
    sizes: SizeSummary,
    labels: LabelSummary,
}

pub fn simulate(cfg: &RunConfig) -> anyhow::Result<String> {
    let sim = &cfg.simulate;
    let mut mix = sim.corpus.clone();
    mix.rng_seed = derive_seed(cfg.rng_seed, "cli/corpus", 0);
    // Reject a bad mix before spending time on the network.
    mix.validate()?;
    if sim.n_memes < 1 {
        return Err(CliError::usage("n_memes must be >= 1").into());
    }
    let net = network_seeded(cfg)?;
    let language = SyntheticLanguage::new(sim.vocab_size, derive_seed(cfg.rng_seed, "cli/language", 0))?;
    let substrate = Substrate::from_network(&net);
    let corpus = generate_corpus(sim.n_memes, &substrate, &language, &mix)?;

    write_network(cfg, &net)?;
    let dir = cfg.out_dir();
    let trajectories: Vec<MemeTrajectory> = corpus.iter().map(|m| m.trajectory.clone()).collect();
    let texts: Vec<_> = corpus.iter().map(|m| m.text.clone()).collect();
    write_atomic(&dir.join("trajectories.jsonl"), |o| Ok(write_trajectories_jsonl(&trajectories, o)?))?;
    write_atomic(&dir.join("texts.jsonl"), |o| Ok(write_texts_jsonl(&texts, o)?))?;
    write_atomic(&dir.join("params.jsonl"), |o| {
        writeln!(o, "# memewatch params schema_version={MANIFEST_SCHEMA_VERSION}")?;
        for m in &corpus {
            serde_json::to_writer(&mut *o, &m.params)?;
            writeln!(o)?;
        }
        Ok(())
    })?;
    for lex in language.lexicons.axes() {
        let path = dir.join("lexicons").join(format!("{}.tsv", lex.axis_name));
        write_atomic(&path, |o| Ok(write_lexicon_tsv(lex, o)?))?;
    }

    let sizes: Vec<usize> = trajectories.iter().map(MemeTrajectory::total_posts).collect();
    let thresholds = cfg.label_thresholds();
    let count = |l: MemeLabel| trajectories.iter().filter(|t| label(t, &thresholds) == l).count();
    let labels = LabelSummary {
        successful: count(MemeLabel::Successful),
        unsuccessful: count(MemeLabel::Unsuccessful),
        excluded: count(MemeLabel::Excluded),
    };
    let summary = format!(
        "corpus: {} memes ({} successful, {} unsuccessful, {} excluded) -> {}",
        sim.n_memes,
        labels.successful,
        labels.unsuccessful,
        labels.excluded,
        dir.display()
    );
    write_json(
        &dir.join("manifest.json"),
        &CorpusManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            rng_seed: cfg.rng_seed,
            n_memes: sim.n_memes,
            network: &net.spec,
            corpus: &mix,
            vocab_size: sim.vocab_size,
            sizes: SizeSummary::of(&sizes)?,
            labels,
        },
    )?;
    Ok(summary)
}

#[derive(Serialize)]
struct DecompositionStats {
    schema_version: u32,
    n_vertices: usize,
    n_edges: usize,
    n_communities: usize,
    modularity: f64,
    k_max: u32,
    kmax_shell_size: usize,
}

pub fn decompose(cfg: &RunConfig) -> anyhow::Result<String> {
    let g = load_input_graph(cfg)?;
    let (partition, shells) = decompose_graph(&g)?;
    let dir = cfg.out_dir();
    let per_vertex = |name: &str, column: &str, value: &dyn Fn(u32) -> u32| {
        write_atomic(&dir.join(name), |o| {
            writeln!(o, "# memewatch {} schema_version={MANIFEST_SCHEMA_VERSION}", column)?;
            writeln!(o, "vertex,{column}")?;
            for v in g.vertices() {
                writeln!(o, "{},{}", g.id(v), value(v))?;
            }
            Ok(())
        })
    };
    per_vertex("partition.csv", "community", &|v| partition.community_of(v))?;
    per_vertex("shells.csv", "shell", &|v| shells.shell(v))?;
    write_json(
        &dir.join("decomposition.json"),
        &DecompositionStats {
            schema_version: MANIFEST_SCHEMA_VERSION,
            n_vertices: g.n_vertices(),
            n_edges: g.n_edges(),
            n_communities: partition.n_communities,
            modularity: partition.modularity_q,
            k_max: shells.k_max,
            kmax_shell_size: shells.kmax_shell().len(),
        },
    )?;
    Ok(format!(
        "decomposition: {} communities (Q = {:.4}), k_max = {} -> {}",
        partition.n_communities,
        partition.modularity_q,
        shells.k_max,
        dir.display()
    ))
}

#[derive(Serialize)]
struct SensorSummary {
    schema_version: u32,
    n_memes: usize,
    n_successful: usize,
    n_sources_tested: usize,
    n_sensors: usize,
    alpha_used: f64,
    flagged_fraction: f64,
    structure: Option<CoreSummary>,
}

pub fn sensors(cfg: &RunConfig) -> anyhow::Result<String> {
    let trajectories = load_trajectories(cfg)?;
    let thresholds = cfg.label_thresholds();
    let successful: Vec<MemeTrajectory> = trajectories
        .iter()
        .filter(|t| label(t, &thresholds) == MemeLabel::Successful)
        .cloned()
        .collect();
    if successful.is_empty() {
        return Err(CliError::data("no successful memes to test early posting against").into());
    }
    let graph_path = cfg.graph_path();
    let structure = if graph_path.is_file() {
        let g = load_graph(&graph_path)?.graph;
        let shells = k_shell_decompose(&g);
        Some((g, shells))
    } else {
        warn!("{} not found; sensors are not characterized against the core", graph_path.display());
        None
    };
    let (report, core): (SensorReport, _) = discover_sensors(
        &successful,
        &trajectories,
        structure.as_ref().map(|(g, s)| (g, s)),
        &cfg.sensor_config(),
    )?;
    let dir = cfg.out_dir();
    write_atomic(&dir.join("sensors.csv"), |o| Ok(write_sensor_csv(&report, o)?))?;
    write_atomic(&cfg.sensors_path(), |o| Ok(write_sensor_list(&report, o)?))?;
    let n_sensors = report.sensors().len();
    write_json(
        &dir.join("sensor_summary.json"),
        &SensorSummary {
            schema_version: SENSOR_SCHEMA_VERSION,
            n_memes: trajectories.len(),
            n_successful: successful.len(),
            n_sources_tested: report.rows.len(),
            n_sensors,
            alpha_used: report.alpha_used,
            flagged_fraction: report.flagged_fraction(),
            structure: core,
        },
    )?;
    Ok(format!(
        "sensors: {n_sensors} of {} sources flagged -> {}",
        report.rows.len(),
        cfg.sensors_path().display()
    ))
}

fn load_lexicons(cfg: &RunConfig) -> anyhow::Result<LexiconSet<f64>> {
    let paths = cfg.lexicon_paths();
    for (axis, path) in &paths {
        require(path, &format!("{axis} lexicon (--lexicon-{axis})"))?;
    }
    let [h, a, d, p] = paths.map(|(axis, path)| Lexicon::load(axis, &path));
    Ok(LexiconSet {
        happiness: h?,
        arousal: a?,
        dominance: d?,
        polarity: p?,
    })
}

fn language(cfg: &RunConfig, trajectories: &[MemeTrajectory]) -> anyhow::Result<BTreeMap<String, [f64; 4]>> {
    let texts_path = cfg.texts_path();
    if !texts_path.is_file() {
        warn!("{} not found; language features are 0", texts_path.display());
        return Ok(BTreeMap::new());
    }
    let texts = read_texts_jsonl(&texts_path)?;
    let lexicons = load_lexicons(cfg)?;
    Ok(language_table(trajectories, &texts, &lexicons, cfg.score_mode)?)
}

fn sensor_set(cfg: &RunConfig) -> anyhow::Result<HashSet<String>> {
    let path = cfg.sensors_path();
    if path.is_file() {
        Ok(read_sensor_list(&path)?)
    } else {
        warn!("{} not found; es_blogs is 0 (run `memewatch sensors` first)", path.display());
        Ok(HashSet::new())
    }
}

pub fn features(cfg: &RunConfig, timing: bool) -> anyhow::Result<String> {
    let trajectories = load_trajectories(cfg)?;
    let g = load_input_graph(cfg)?;
    let (partition, shells) = decompose_graph(&g)?;
    let context = NetworkContext::from_structure(&g, &partition, &shells, sensor_set(cfg)?);
    let language = language(cfg, &trajectories)?;
    let thresholds = cfg.label_thresholds();
    let mut written = Vec::new();
    for &tau in &cfg.horizons {
        let rows = feature_matrix(&trajectories, &language, &context, tau, &thresholds)?;
        let path = cfg.features_file(tau);
        write_atomic(&path, |o| Ok(write_feature_csv(&rows, o)?))?;
        info!("τ = {tau} h: {:?} (successful, unsuccessful, excluded)", label_counts(&rows));
        written.push(path.display().to_string());
    }
    if timing {
        let path = cfg.out_dir().join("timing.csv");
        write_atomic(&path, |o| Ok(write_timing_csv(&timing_table(&trajectories, &thresholds), o)?))?;
        written.push(path.display().to_string());
    }
    Ok(format!("features: {} memes -> {}", trajectories.len(), written.join(", ")))
}

/// The feature file a learning command reads: `--features`, else the file
/// for `--tau`, else the first configured horizon.
fn feature_input(cfg: &RunConfig, features: &Option<PathBuf>, tau: Option<f64>) -> anyhow::Result<(PathBuf, Vec<Features>)> {
    let path = match features {
        Some(p) => p.clone(),
        None => cfg.features_file(tau.unwrap_or(cfg.horizons[0])),
    };
    require(&path, "feature CSV (--features or --tau; run `memewatch features` first)")?;
    let rows = read_feature_csv(&path)?;
    if rows.is_empty() {
        return Err(CliError::data(format!("{} holds no feature rows", path.display())).into());
    }
    Ok((path, rows))
}

fn horizon_of(rows: &[Features]) -> f64 {
    rows[0].tau_hours
}

pub fn train(cfg: &RunConfig, features: &Option<PathBuf>, tau: Option<f64>) -> anyhow::Result<String> {
    let (_, rows) = feature_input(cfg, features, tau)?;
    let eval = cfg.eval_config();
    let data = evaluation_dataset(&rows, &eval)?;
    let cv = cross_validate(&data, &cfg.model, eval.k_folds, cfg.rng_seed)?;
    let mut model: TrainedModel = cfg.model.fit(&data, derive_seed(cfg.rng_seed, "cli/train", 0))?;
    model.metadata.cv_accuracy = Some(cv.accuracy);
    model.metadata.cv_folds = Some(eval.k_folds);
    model.metadata.tau_hours = Some(horizon_of(&rows));
    let path = cfg.model_path();
    write_atomic(&path, |o| Ok(model.write_json(o)?))?;
    Ok(format!(
        "model: {:?} on {} rows at τ = {} h, CV accuracy {:.4} -> {}",
        model.kind,
        data.n_rows(),
        horizon_of(&rows),
        cv.accuracy,
        path.display()
    ))
}

pub fn eval(cfg: &RunConfig, features: &Option<PathBuf>, tau: Option<f64>) -> anyhow::Result<String> {
    let (_, rows) = feature_input(cfg, features, tau)?;
    let eval = cfg.eval_config();
    let data = evaluation_dataset(&rows, &eval)?;
    let cv = cross_validate(&data, &cfg.model, eval.k_folds, cfg.rng_seed)?;
    let ranking = cv_permutation_importance(&data, &cfg.model, eval.k_folds, eval.n_permutations, cfg.rng_seed)?;
    let tau = horizon_of(&rows);
    let dir = cfg.out_dir();
    let cv_path = dir.join(format!("cv_{tau}h.csv"));
    write_atomic(&cv_path, |o| Ok(write_cv_csv(&cv, o)?))?;
    write_atomic(&dir.join(format!("importance_{tau}h.csv")), |o| {
        writeln!(o, "# memewatch importance schema_version={MANIFEST_SCHEMA_VERSION}")?;
        writeln!(o, "rank,feature,importance")?;
        for (i, imp) in ranking.iter().enumerate() {
            writeln!(o, "{},{},{}", i + 1, imp.feature, imp.importance)?;
        }
        Ok(())
    })?;
    Ok(format!(
        "eval: τ = {tau} h, {}-fold accuracy {:.4}, top feature {} -> {}",
        eval.k_folds,
        cv.accuracy,
        ranking[0].feature,
        cv_path.display()
    ))
}

pub fn predict(cfg: &RunConfig, features: &Option<PathBuf>, tau: Option<f64>) -> anyhow::Result<String> {
    let model_path = cfg.model_path();
    require(&model_path, "model JSON (--model; run `memewatch train` first)")?;
    let model = TrainedModel::load(&model_path).with_context(|| format!("loading {}", model_path.display()))?;
    let (_, rows) = feature_input(cfg, features, tau.or(model.metadata.tau_hours))?;
    let columns: Vec<usize> = model
        .feature_names
        .iter()
        .map(|name| {
            FEATURE_NAMES
                .iter()
                .position(|f| f == name)
                .ok_or_else(|| CliError::data(format!("model uses unknown feature {name:?}")))
        })
        .collect::<Result<_, _>>()?;
    let mut correct = 0usize;
    let mut labeled = 0usize;
    let path = cfg.out_dir().join("predictions.csv");
    write_atomic(&path, |o| {
        writeln!(o, "# memewatch predictions schema_version={FEATURE_SCHEMA_VERSION}")?;
        writeln!(o, "meme_id,tau_hours,score,predicted,label")?;
        for row in &rows {
            let values = row.values();
            let x: Vec<f64> = columns.iter().map(|&j| values[j]).collect();
            let p = model.predict(&x)?;
            if row.label != MemeLabel::Excluded {
                labeled += 1;
                correct += usize::from(p.label == row.label);
            }
            writeln!(o, "{},{},{},{},{}", row.meme_id, row.tau_hours, p.score, p.label.as_str(), row.label.as_str())?;
        }
        Ok(())
    })?;
    let acc = if labeled > 0 { format!("{:.4}", correct as f64 / labeled as f64) } else { "n/a".into() };
    Ok(format!("predictions: {} memes, accuracy on labeled memes {acc} -> {}", rows.len(), path.display()))
}

pub fn report(cfg: &RunConfig) -> anyhow::Result<String> {
    let trajectories = load_trajectories(cfg)?;
    let eval = cfg.eval_config();
    let mut table = Vec::new();
    for &tau in &cfg.horizons {
        let (_, rows) = feature_input(cfg, &None, Some(tau))?;
        let row = evaluate_horizon(&rows, &trajectories, &eval).with_context(|| format!("evaluating τ = {tau} h"))?;
        info!("τ = {tau} h: accuracy {:.4}, top {:?}", row.accuracy, row.top_features(3));
        table.push(row);
    }
    let path = cfg.out_dir().join("report.csv");
    write_atomic(&path, |o| Ok(write_report_csv(&table, o)?))?;
    let accs: Vec<String> = table.iter().map(|r| format!("{}h {:.3}", r.tau_hours, r.accuracy)).collect();
    Ok(format!("report: {} -> {}", accs.join(", "), path.display()))
}
