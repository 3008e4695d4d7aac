//! Early-sensor discovery.
//!
//! A source is an early sensor when it posts early on successful memes more
//! often than chance allows. "Early" means within the first `early_frac` of a
//! meme's lifespan. Under the null every poster on meme `M` is early with the
//! same probability `q_M = e_M / n_M`, so a source's early count over the `k`
//! memes it posted on is Poisson-binomial; the default test approximates it
//! by a binomial with the mean `q`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::Write;

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Event, MemeTrajectory};
use crate::graph::{Graph, KShellIndex};
use crate::rng::substream;
use crate::scalar::Real;

pub const SENSOR_SCHEMA_VERSION: u32 = 1;

/// Largest trial count for which the exact Poisson-binomial tail is used
/// when requested.
pub const EXACT_MAX_TRIALS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    pub early_frac: f64,
    pub alpha: f64,
    /// Divide `alpha` by the number of sources tested.
    pub bonferroni: bool,
    /// Evaluate the exact Poisson-binomial tail for sources with at most
    /// [`EXACT_MAX_TRIALS`] memes.
    pub exact: bool,
    /// Memes with fewer total posts than this are "sub-threshold" in the
    /// avoidance test.
    pub avoid_threshold: usize,
    /// Fraction of successful memes a sensor must catch early to be "strong".
    pub strong_fraction: f64,
    /// Fraction of vertices, by shell index, that forms the core.
    pub core_fraction: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            early_frac: 0.03,
            alpha: 0.05,
            bonferroni: false,
            exact: false,
            avoid_threshold: 25,
            strong_fraction: 0.25,
            core_fraction: 0.001,
        }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.early_frac > 0.0 && self.early_frac <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "early_frac must be in (0, 1], got {}",
                self.early_frac
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        if self.avoid_threshold < 1 {
            return Err(Error::InvalidParameter("avoid_threshold must be >= 1".into()));
        }
        if !(self.core_fraction > 0.0 && self.core_fraction <= 1.0) {
            return Err(Error::InvalidParameter("core_fraction must be in (0, 1]".into()));
        }
        Ok(())
    }
}

/// `P[X >= k]` for `X ~ Binomial(n, p)`, summed in log space.
pub fn binomial_upper_tail<T: Real>(n: usize, k: usize, p: T) -> T {
    if k == 0 {
        return T::one();
    }
    if k > n || p <= T::zero() {
        return T::zero();
    }
    if p >= T::one() {
        return T::one();
    }
    tail_sum(n, k..=n, p).min(T::one())
}

/// `P[X <= k]` for `X ~ Binomial(n, p)`.
pub fn binomial_lower_tail<T: Real>(n: usize, k: usize, p: T) -> T {
    if k >= n || p <= T::zero() {
        return T::one();
    }
    if p >= T::one() {
        return T::zero();
    }
    tail_sum(n, 0..=k, p).min(T::one())
}

fn tail_sum<T: Real>(n: usize, range: std::ops::RangeInclusive<usize>, p: T) -> T {
    let (lp, lq) = (p.ln(), (T::one() - p).ln());
    let start = *range.start();
    // ln C(n, start), then updated incrementally across the range.
    let mut log_c = T::zero();
    for i in 0..start {
        log_c += T::from_count(n - i).ln() - T::from_count(i + 1).ln();
    }
    let mut terms = Vec::with_capacity(range.end() - start + 1);
    for j in range {
        terms.push(log_c + T::from_count(j) * lp + T::from_count(n - j) * lq);
        if j < n {
            log_c += T::from_count(n - j).ln() - T::from_count(j + 1).ln();
        }
    }
    let peak = terms.iter().copied().fold(T::neg_infinity(), T::max);
    if peak == T::neg_infinity() {
        return T::zero();
    }
    peak.exp() * terms.iter().map(|&t| (t - peak).exp()).sum::<T>()
}

/// `P[X >= k]` for a sum of independent Bernoulli(`ps[i]`) variables.
pub fn poisson_binomial_upper_tail<T: Real>(ps: &[T], k: usize) -> T {
    let mut dist = vec![T::zero(); ps.len() + 1];
    dist[0] = T::one();
    for (i, &p) in ps.iter().enumerate() {
        for j in (0..=i + 1).rev() {
            let stay = dist[j] * (T::one() - p);
            let step = if j > 0 { dist[j - 1] * p } else { T::zero() };
            dist[j] = stay + step;
        }
    }
    dist.iter().skip(k).copied().sum::<T>().min(T::one())
}

/// Distinct sources posting within the first `early_frac` of each meme's
/// lifespan. Memes without a lifespan (a single event, or all events at
/// t = 0) are skipped.
pub fn early_posters(corpus: &[MemeTrajectory], early_frac: f64) -> Result<BTreeMap<String, BTreeSet<String>>> {
    if !(early_frac > 0.0 && early_frac <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "early_frac must be in (0, 1], got {early_frac}"
        )));
    }
    let mut out = BTreeMap::new();
    let mut skipped = 0usize;
    for traj in corpus {
        if traj.events.len() < 2 || traj.lifespan() <= 0.0 {
            skipped += 1;
            continue;
        }
        let cutoff = early_frac * traj.lifespan();
        let early = traj.prefix(cutoff).iter().map(|e| e.source().to_owned()).collect();
        out.insert(traj.meme_id.clone(), early);
    }
    if skipped > 0 {
        warn!("skipped {skipped} memes with no lifespan");
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SensorRow<T> {
    pub source_id: String,
    pub n_memes_posted: usize,
    pub n_early: usize,
    pub p_value: T,
    pub is_sensor: bool,
    pub avoidance_p: Option<T>,
    pub in_core_top_fraction: bool,
    pub in_kmax_shell: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SensorReport<T> {
    /// Sorted by `source_id`.
    pub rows: Vec<SensorRow<T>>,
    /// Successful memes that entered the test.
    pub n_memes: usize,
    /// Significance level actually applied (after any correction).
    pub alpha_used: T,
}

impl<T: Real> SensorReport<T> {
    pub fn sensors(&self) -> Vec<&str> {
        self.rows.iter().filter(|r| r.is_sensor).map(|r| r.source_id.as_str()).collect()
    }

    pub fn sensor_set(&self) -> HashSet<String> {
        self.sensors().into_iter().map(str::to_owned).collect()
    }

    /// Fraction of tested sources flagged as sensors.
    pub fn flagged_fraction(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().filter(|r| r.is_sensor).count() as f64 / self.rows.len() as f64
    }
}

/// Binomial early-posting test over a corpus of successful memes.
pub fn sensor_test<T: Real>(successful: &[MemeTrajectory], cfg: &SensorConfig) -> Result<SensorReport<T>> {
    cfg.validate()?;
    let early = early_posters(successful, cfg.early_frac)?;
    if early.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "sensor test needs at least 2 successful memes with a lifespan, got {}",
            early.len()
        )));
    }
    // Per meme: q_M, and per source: the (q, was_early) pairs of its memes.
    let mut trials: BTreeMap<String, Vec<(T, bool)>> = BTreeMap::new();
    let mut qs = Vec::with_capacity(early.len());
    for traj in successful.iter().filter(|t| early.contains_key(&t.meme_id)) {
        let e = &early[&traj.meme_id];
        let posters: BTreeSet<&str> = traj.events.iter().map(Event::source).collect();
        let q = T::from_count(e.len()) / T::from_count(posters.len());
        qs.push(q);
        for s in posters {
            trials.entry(s.to_owned()).or_default().push((q, e.contains(s)));
        }
    }
    let degenerate = qs.iter().all(|&q| q >= T::one()) || qs.iter().all(|&q| q <= T::zero());
    if degenerate {
        warn!("degenerate corpus: every post is early or none is; all p-values set to 1");
    }
    let alpha_used = if cfg.bonferroni {
        T::lit(cfg.alpha) / T::from_count(trials.len().max(1))
    } else {
        T::lit(cfg.alpha)
    };
    let rows = trials
        .into_iter()
        .map(|(source_id, t)| {
            let k = t.len();
            let n_early = t.iter().filter(|(_, e)| *e).count();
            let p_value = if degenerate || n_early == 0 {
                T::one()
            } else if cfg.exact && k <= EXACT_MAX_TRIALS {
                let ps: Vec<T> = t.iter().map(|(q, _)| *q).collect();
                poisson_binomial_upper_tail(&ps, n_early)
            } else {
                let mean_q = t.iter().map(|(q, _)| *q).sum::<T>() / T::from_count(k);
                binomial_upper_tail(k, n_early, mean_q)
            };
            SensorRow {
                source_id,
                n_memes_posted: k,
                n_early,
                p_value,
                is_sensor: p_value < alpha_used,
                avoidance_p: None,
                in_core_top_fraction: false,
                in_kmax_shell: false,
            }
        })
        .collect();
    Ok(SensorReport {
        rows,
        n_memes: early.len(),
        alpha_used,
    })
}

/// Lower-tail test of how often each source mentions memes with fewer than
/// `threshold` total posts, against the corpus-wide fraction of such memes.
/// `None` for sources that mention no meme.
pub fn avoidance_test<T: Real>(
    sources: &[&str],
    corpus: &[MemeTrajectory],
    threshold: usize,
) -> Result<BTreeMap<String, Option<T>>> {
    if threshold < 1 {
        return Err(Error::InvalidParameter("avoidance threshold must be >= 1".into()));
    }
    if corpus.is_empty() {
        return Err(Error::Empty("avoidance test needs a corpus".into()));
    }
    let wanted: HashSet<&str> = sources.iter().copied().collect();
    let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
    let mut n_small = 0usize;
    for traj in corpus {
        let small = traj.total_posts() < threshold;
        n_small += usize::from(small);
        let posters: HashSet<&str> = traj.events.iter().map(Event::source).collect();
        for s in posters.into_iter().filter(|s| wanted.contains(s)) {
            let c = counts.entry(s).or_default();
            c.0 += 1;
            c.1 += usize::from(small);
        }
    }
    let p = T::from_count(n_small) / T::from_count(corpus.len());
    Ok(sources
        .iter()
        .map(|&s| {
            let value = counts
                .get(s)
                .map(|&(mentions, small)| binomial_lower_tail(mentions, small, p));
            (s.to_owned(), value)
        })
        .collect())
}

/// Where the sensors sit in the shell structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreSummary {
    pub n_sensors: usize,
    /// Sensors among the top `core_fraction` of vertices by shell index.
    pub sensors_in_core: f64,
    /// The same fraction over every tested source (baseline).
    pub all_sources_in_core: f64,
    pub n_strong: usize,
    /// Strong sensors inside the `k_max`-shell; `None` without strong sensors.
    pub strong_in_kmax_shell: Option<f64>,
    /// Strong sensors inside the top-|`k_max`-shell| vertices by degree.
    pub strong_in_top_degree: Option<f64>,
}

/// Fills the structural flags of every row and summarizes sensor placement.
pub fn characterize<T: Real>(
    report: &mut SensorReport<T>,
    graph: &Graph,
    shells: &KShellIndex,
    cfg: &SensorConfig,
) -> Result<CoreSummary> {
    cfg.validate()?;
    let ids = |vs: Vec<u32>| -> HashSet<&str> { vs.into_iter().map(|v| graph.id(v)).collect() };
    let core = ids(shells.top_fraction(cfg.core_fraction));
    let kmax_vertices = shells.kmax_shell();
    let kmax_size = kmax_vertices.len();
    let kmax = ids(kmax_vertices);
    let mut by_degree: Vec<u32> = graph.vertices().collect();
    by_degree.sort_by(|&a, &b| graph.degree(b).cmp(&graph.degree(a)).then(a.cmp(&b)));
    by_degree.truncate(kmax_size);
    let top_degree = ids(by_degree);

    for row in &mut report.rows {
        row.in_core_top_fraction = core.contains(row.source_id.as_str());
        row.in_kmax_shell = kmax.contains(row.source_id.as_str());
    }
    let frac = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    let sensors: Vec<&SensorRow<T>> = report.rows.iter().filter(|r| r.is_sensor).collect();
    let strong_min = cfg.strong_fraction * report.n_memes as f64;
    let strong: Vec<&&SensorRow<T>> = sensors.iter().filter(|r| r.n_early as f64 >= strong_min).collect();
    Ok(CoreSummary {
        n_sensors: sensors.len(),
        sensors_in_core: frac(sensors.iter().filter(|r| r.in_core_top_fraction).count(), sensors.len())
            .unwrap_or(0.0),
        all_sources_in_core: frac(
            report.rows.iter().filter(|r| r.in_core_top_fraction).count(),
            report.rows.len(),
        )
        .unwrap_or(0.0),
        n_strong: strong.len(),
        strong_in_kmax_shell: frac(strong.iter().filter(|r| r.in_kmax_shell).count(), strong.len()),
        strong_in_top_degree: frac(
            strong.iter().filter(|r| top_degree.contains(r.source_id.as_str())).count(),
            strong.len(),
        ),
    })
}

/// Full discovery: the early-posting test on the successful memes, the
/// avoidance test on the whole corpus, and (given a graph) the structural
/// annotation.
pub fn discover_sensors<T: Real>(
    successful: &[MemeTrajectory],
    corpus: &[MemeTrajectory],
    structure: Option<(&Graph, &KShellIndex)>,
    cfg: &SensorConfig,
) -> Result<(SensorReport<T>, Option<CoreSummary>)> {
    let mut report = sensor_test(successful, cfg)?;
    let sources: Vec<&str> = report.rows.iter().map(|r| r.source_id.as_str()).collect();
    let avoid = avoidance_test::<T>(&sources, corpus, cfg.avoid_threshold)?;
    for row in &mut report.rows {
        row.avoidance_p = avoid.get(&row.source_id).copied().flatten();
    }
    let summary = match structure {
        Some((g, shells)) => Some(characterize(&mut report, g, shells, cfg)?),
        None => None,
    };
    Ok((report, summary))
}

pub fn write_sensor_csv<T: Real>(report: &SensorReport<T>, mut out: impl Write) -> Result<()> {
    writeln!(
        out,
        "# memewatch sensors schema_version={SENSOR_SCHEMA_VERSION} memes={} alpha={}",
        report.n_memes, report.alpha_used
    )
    .map_err(|e| Error::io("<output>", e))?;
    let mut w = csv::Writer::from_writer(out);
    for row in &report.rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

/// One sensor id per line, after a schema comment.
pub fn write_sensor_list<T: Real>(report: &SensorReport<T>, mut out: impl Write) -> Result<()> {
    let io = |e| Error::io("<output>", e);
    writeln!(out, "# memewatch sensor-list schema_version={SENSOR_SCHEMA_VERSION}").map_err(io)?;
    for s in report.sensors() {
        writeln!(out, "{s}").map_err(io)?;
    }
    Ok(())
}

/// Reads a sensor list: one id per line, `#` comments and blank lines ignored.
pub fn read_sensor_list(path: impl AsRef<std::path::Path>) -> Result<HashSet<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect())
}

/// A corpus with no early-posting skill: each of `n_blogs` sources posts on
/// each meme with probability `post_prob`, and each post is early with
/// probability `early_prob` regardless of source. Early posts land in
/// [0, 2] hours, late ones in [10, 100].
pub fn null_corpus(n_memes: usize, n_blogs: usize, post_prob: f64, early_prob: f64, seed: u64) -> Vec<MemeTrajectory> {
    let width = n_blogs.saturating_sub(1).to_string().len();
    (0..n_memes)
        .filter_map(|m| {
            let mut rng = substream(seed, "sensors/null", m as u64);
            let mut events = Vec::new();
            for b in 0..n_blogs {
                if rng.random::<f64>() < post_prob {
                    let t = if rng.random::<f64>() < early_prob {
                        rng.random_range(0.0..2.0)
                    } else {
                        rng.random_range(10.0..100.0)
                    };
                    events.push(Event(t, format!("b{b:0width$}")));
                }
            }
            MemeTrajectory::from_unanchored(format!("null{m:05}"), events).ok()
        })
        .collect()
}
