//! `memewatch`: simulate, decompose, featurize, train and report on meme
//! cascades from the command line.
//!
//! Errors go to stderr as a single `error[kind]: message` line; the exit
//! status is 2 for usage errors and 1 for everything else.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use memewatch_core::learn::ModelKind;
use memewatch_core::sim::{CorpusMix, NetworkSpec};
use memewatch_core::textfeat::ScoreMode;

use config::RunConfig;

/// A failure with a machine-readable kind.
#[derive(Debug)]
pub struct CliError {
    kind: &'static str,
    msg: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError { kind: "usage", msg: msg.into() }
    }

    pub fn missing(path: &Path, what: &str) -> Self {
        CliError {
            kind: "missing-input",
            msg: format!("{what} not found at {}", path.display()),
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError { kind: "data", msg: msg.into() }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.msg)
    }
}

impl std::error::Error for CliError {}

#[derive(Parser, Debug)]
#[command(name = "memewatch", version, about = "Early prediction of meme cascades")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every command; each overrides the config file.
#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; unset inputs are also looked up here [default: out].
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Root seed of every random choice [default: 1].
    #[arg(long, global = true)]
    rng_seed: Option<u64>,
    /// Comma-separated prediction horizons in hours [default: 12,24,48,120].
    #[arg(long, global = true, value_delimiter = ',')]
    horizons: Option<Vec<f64>>,
    /// Minimum total posts of a successful meme [default: 1000].
    #[arg(long, global = true)]
    success_min: Option<usize>,
    /// Maximum total posts of an unsuccessful meme [default: 100].
    #[arg(long, global = true)]
    failure_max: Option<usize>,
    /// Fraction of a meme's lifespan that counts as early [default: 0.03].
    #[arg(long, global = true)]
    early_frac: Option<f64>,
    /// Total-post bound of the sensor avoidance test [default: 25].
    #[arg(long, global = true)]
    avoid_threshold: Option<usize>,
    /// Significance level of the sensor tests [default: 0.05].
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Lexicon scoring rule [default: weighted-average].
    #[arg(long, global = true)]
    score_mode: Option<ScoreModeArg>,
    /// Graph edge list [default: OUT_DIR/graph.tsv].
    #[arg(long, global = true)]
    graph: Option<PathBuf>,
    /// Trajectories JSONL [default: OUT_DIR/trajectories.jsonl].
    #[arg(long, global = true)]
    trajectories: Option<PathBuf>,
    /// Meme texts JSONL [default: OUT_DIR/texts.jsonl].
    #[arg(long, global = true)]
    texts: Option<PathBuf>,
    /// Happiness lexicon TSV [default: OUT_DIR/lexicons/happiness.tsv].
    #[arg(long, global = true)]
    lexicon_happiness: Option<PathBuf>,
    /// Arousal lexicon TSV [default: OUT_DIR/lexicons/arousal.tsv].
    #[arg(long, global = true)]
    lexicon_arousal: Option<PathBuf>,
    /// Dominance lexicon TSV [default: OUT_DIR/lexicons/dominance.tsv].
    #[arg(long, global = true)]
    lexicon_dominance: Option<PathBuf>,
    /// Polarity lexicon TSV [default: OUT_DIR/lexicons/polarity.tsv].
    #[arg(long, global = true)]
    lexicon_polarity: Option<PathBuf>,
    /// Sensor list [default: OUT_DIR/sensors.txt].
    #[arg(long, global = true)]
    sensors: Option<PathBuf>,
    /// Model JSON [default: OUT_DIR/model.json].
    #[arg(long, global = true)]
    model: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScoreModeArg {
    WeightedAverage,
    Literal,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    /// The general-purpose network and mixed corpus.
    Default,
    /// Isolated small communities, fixed seed counts: outcome depends on
    /// where the seeds land.
    SeedingDriven,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    NaiveBayes,
    TreeEnsemble,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic community/core-periphery network.
    Gen(SimArgs),
    /// Generate a network and a corpus of simulated memes with text.
    Simulate(SimArgs),
    /// Community partition and k-shell decomposition of a graph.
    Decompose,
    /// Feature matrices at every horizon.
    Features {
        /// Also write the time-to-N-posts table.
        #[arg(long)]
        timing: bool,
    },
    /// Discover early-sensor sources.
    Sensors {
        /// Bonferroni-correct alpha over all tested sources.
        #[arg(long)]
        bonferroni: bool,
    },
    /// Fit a model on one horizon's features.
    Train(LearnArgs),
    /// Cross-validated accuracy and feature importance at one horizon.
    Eval(LearnArgs),
    /// Score memes with a trained model.
    Predict(LearnArgs),
    /// Accuracy and top features at every horizon.
    Report(ModelArgs),
}

#[derive(Args, Debug)]
struct SimArgs {
    /// Parameter preset, applied before the other flags.
    #[arg(long)]
    preset: Option<Preset>,
    /// Number of memes [default: 1000].
    #[arg(long)]
    n_memes: Option<usize>,
    /// Seeds per meme (fixed count).
    #[arg(long)]
    n_seeds: Option<usize>,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Learner [default: tree-ensemble].
    #[arg(long)]
    model_kind: Option<KindArg>,
    /// Trees in the ensemble [default: 100].
    #[arg(long)]
    n_trees: Option<usize>,
    /// Maximum tree depth [default: unlimited].
    #[arg(long)]
    max_depth: Option<usize>,
    /// Cross-validation folds [default: 10].
    #[arg(long)]
    folds: Option<usize>,
}

#[derive(Args, Debug)]
struct LearnArgs {
    /// Feature CSV to read [default: OUT_DIR/features_<TAU>h.csv].
    #[arg(long)]
    features: Option<PathBuf>,
    /// Horizon whose feature file to read [default: first horizon].
    #[arg(long)]
    tau: Option<f64>,
    #[command(flatten)]
    model: ModelArgs,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply_common(cfg: &mut RunConfig, c: Common) {
    set(&mut cfg.rng_seed, c.rng_seed);
    set(&mut cfg.horizons, c.horizons);
    let t = &mut cfg.thresholds;
    set(&mut t.success_min, c.success_min);
    set(&mut t.failure_max, c.failure_max);
    set(&mut t.early_frac, c.early_frac);
    set(&mut t.avoid_threshold, c.avoid_threshold);
    set(&mut t.alpha, c.alpha);
    set(
        &mut cfg.score_mode,
        c.score_mode.map(|m| match m {
            ScoreModeArg::WeightedAverage => ScoreMode::WeightedAverage,
            ScoreModeArg::Literal => ScoreMode::Literal,
        }),
    );
    let p = &mut cfg.paths;
    let paths = [
        (&mut p.out_dir, c.out_dir),
        (&mut p.graph, c.graph),
        (&mut p.trajectories, c.trajectories),
        (&mut p.texts, c.texts),
        (&mut p.lexicon_happiness, c.lexicon_happiness),
        (&mut p.lexicon_arousal, c.lexicon_arousal),
        (&mut p.lexicon_dominance, c.lexicon_dominance),
        (&mut p.lexicon_polarity, c.lexicon_polarity),
        (&mut p.sensors, c.sensors),
        (&mut p.model, c.model),
    ];
    for (slot, value) in paths {
        if value.is_some() {
            *slot = value;
        }
    }
}

fn apply_sim(cfg: &mut RunConfig, a: &SimArgs) {
    match a.preset {
        Some(Preset::Default) => {
            cfg.simulate.network = NetworkSpec::default();
            cfg.simulate.corpus = CorpusMix::default();
        }
        Some(Preset::SeedingDriven) => {
            cfg.simulate.network = NetworkSpec::seeding_driven();
            cfg.simulate.corpus = CorpusMix::seeding_driven();
        }
        None => {}
    }
    set(&mut cfg.simulate.n_memes, a.n_memes);
    set(&mut cfg.simulate.corpus.n_seeds, a.n_seeds.map(|n| [n, n]));
}

fn apply_model(cfg: &mut RunConfig, a: &ModelArgs) {
    set(
        &mut cfg.model.kind,
        a.model_kind.map(|k| match k {
            KindArg::NaiveBayes => ModelKind::NaiveBayes,
            KindArg::TreeEnsemble => ModelKind::TreeEnsemble,
        }),
    );
    set(&mut cfg.model.n_trees, a.n_trees);
    if a.max_depth.is_some() {
        cfg.model.max_depth = a.max_depth;
    }
    set(&mut cfg.eval.k_folds, a.folds);
}

fn run(cli: Cli) -> anyhow::Result<String> {
    let mut cfg = match &cli.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    apply_common(&mut cfg, cli.common);
    match &cli.command {
        Command::Gen(a) | Command::Simulate(a) => apply_sim(&mut cfg, a),
        Command::Train(a) | Command::Eval(a) | Command::Predict(a) => apply_model(&mut cfg, &a.model),
        Command::Report(a) => apply_model(&mut cfg, a),
        Command::Sensors { bonferroni } => cfg.bonferroni |= bonferroni,
        Command::Decompose | Command::Features { .. } => {}
    }
    cfg.validate()?;
    match &cli.command {
        Command::Gen(_) => commands::gen(&cfg),
        Command::Simulate(_) => commands::simulate(&cfg),
        Command::Decompose => commands::decompose(&cfg),
        Command::Features { timing } => commands::features(&cfg, *timing),
        Command::Sensors { .. } => commands::sensors(&cfg),
        Command::Train(a) => commands::train(&cfg, &a.features, a.tau),
        Command::Eval(a) => commands::eval(&cfg, &a.features, a.tau),
        Command::Predict(a) => commands::predict(&cfg, &a.features, a.tau),
        Command::Report(_) => commands::report(&cfg),
    }
}

/// The kind label and exit status of a failure.
fn classify(err: &anyhow::Error) -> (&'static str, u8) {
    use memewatch_core::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return (e.kind, if e.kind == "usage" { 2 } else { 1 });
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::InvalidParameter(_) => ("usage", 2),
                E::Io { .. } => ("io", 1),
                E::Parse { .. } | E::Json(_) | E::Csv(_) => ("parse", 1),
                E::SchemaVersion { .. } => ("schema", 1),
                _ => ("data", 1),
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return ("io", 1);
        }
    }
    ("internal", 1)
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("error[usage]: {}", one_line(first.trim_start_matches("error: ")));
            return ExitCode::from(2);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            let (kind, code) = classify(&err);
            eprintln!("error[{kind}]: {}", one_line(&format!("{err:#}")));
            ExitCode::from(code)
        }
    }
}
