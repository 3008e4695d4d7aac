//! Per-meme features at an observation horizon τ (hours after the first post).
//!
//! Four language features, two volume features (`n_posts`, `post_rate`) and
//! three network features (communities touched, `k_max`-shell sources, early
//! sensor sources), plus the eventual success label.

mod io;
mod timing;
mod trajectory;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CommunityPartition, Graph, KShellIndex};
use crate::scalar::{Real, Scalar};

pub use io::{
    read_feature_csv, read_texts_jsonl, read_trajectories_jsonl, write_feature_csv,
    write_texts_jsonl, write_trajectories_jsonl, MemeText, FEATURE_SCHEMA_VERSION,
};
pub use timing::{timing_table, write_timing_csv, TimingRow};
pub use trajectory::{Event, MemeTrajectory};

/// Column order of the feature matrix.
pub const FEATURE_NAMES: [&str; 9] = [
    "happiness",
    "arousal",
    "dominance",
    "polarity",
    "n_posts",
    "post_rate",
    "community_dispersion",
    "k_core_blogs",
    "es_blogs",
];

/// Horizons, in hours, evaluated by default.
pub const DEFAULT_HORIZONS: [f64; 4] = [12.0, 24.0, 48.0, 120.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemeLabel {
    Successful,
    Unsuccessful,
    Excluded,
}

impl MemeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            MemeLabel::Successful => "successful",
            MemeLabel::Unsuccessful => "unsuccessful",
            MemeLabel::Excluded => "excluded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelThresholds {
    /// Lifetime posts at or above which a meme is successful.
    pub success_min: usize,
    /// Lifetime posts at or below which a meme is unsuccessful.
    pub failure_max: usize,
}

impl Default for LabelThresholds {
    fn default() -> Self {
        LabelThresholds {
            success_min: 1000,
            failure_max: 100,
        }
    }
}

impl LabelThresholds {
    pub fn validate(&self) -> Result<()> {
        if self.success_min <= self.failure_max {
            return Err(Error::InvalidParameter(format!(
                "success_min ({}) must exceed failure_max ({})",
                self.success_min, self.failure_max
            )));
        }
        Ok(())
    }

    pub fn label_count(&self, total_posts: usize) -> MemeLabel {
        if total_posts >= self.success_min {
            MemeLabel::Successful
        } else if total_posts <= self.failure_max {
            MemeLabel::Unsuccessful
        } else {
            MemeLabel::Excluded
        }
    }
}

pub fn label(traj: &MemeTrajectory, thresholds: &LabelThresholds) -> MemeLabel {
    thresholds.label_count(traj.total_posts())
}

/// Posts with `t <= tau`.
pub fn n_posts(traj: &MemeTrajectory, tau: f64) -> usize {
    traj.prefix(tau).len()
}

/// `(n_posts(τ) − n_posts(τ/2)) / (τ/2)`, posts per hour.
///
/// Generic so the rate can be computed exactly with a rational `T`.
pub fn post_rate<T: Scalar>(traj: &MemeTrajectory, tau: T) -> Result<T> {
    if tau <= T::zero() {
        return Err(Error::ZeroHorizon);
    }
    let half = tau / (T::one() + T::one());
    let to_hours = |x: T| x.to_f64().ok_or_else(|| Error::InvalidParameter("horizon not representable".into()));
    let late = n_posts(traj, to_hours(tau)?);
    let early = n_posts(traj, to_hours(half)?);
    Ok(T::from_count(late - early) / half)
}

/// Source → community lookup. Sources missing from the map all fall into one
/// shared "unknown" community.
#[derive(Debug, Clone, Default)]
pub struct CommunityMap {
    map: HashMap<String, u32>,
}

impl CommunityMap {
    pub fn from_partition<T: Real>(g: &Graph, partition: &CommunityPartition<T>) -> Self {
        let map = g
            .vertices()
            .map(|v| (g.id(v).to_owned(), partition.community_of(v)))
            .collect();
        CommunityMap { map }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, u32)>) -> Self {
        CommunityMap {
            map: pairs.into_iter().collect(),
        }
    }

    pub fn get(&self, source: &str) -> Option<u32> {
        self.map.get(source).copied()
    }

    pub fn n_communities(&self) -> usize {
        self.map.values().collect::<HashSet<_>>().len()
    }
}

/// Source → shell lookup. Unknown sources are never in the `k_max`-shell.
#[derive(Debug, Clone, Default)]
pub struct ShellMap {
    map: HashMap<String, u32>,
    k_max: u32,
}

impl ShellMap {
    pub fn from_index(g: &Graph, shells: &KShellIndex) -> Self {
        let map = g
            .vertices()
            .map(|v| (g.id(v).to_owned(), shells.shell(v)))
            .collect();
        ShellMap {
            map,
            k_max: shells.k_max,
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, u32)>) -> Self {
        let map: HashMap<String, u32> = pairs.into_iter().collect();
        let k_max = map.values().copied().max().unwrap_or(0);
        ShellMap { map, k_max }
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    pub fn shell(&self, source: &str) -> Option<u32> {
        self.map.get(source).copied()
    }

    pub fn in_kmax_shell(&self, source: &str) -> bool {
        !self.map.is_empty() && self.shell(source) == Some(self.k_max)
    }

    pub fn kmax_shell_size(&self) -> usize {
        if self.map.is_empty() {
            return 0;
        }
        self.map.values().filter(|&&s| s == self.k_max).count()
    }
}

/// Distinct communities touched by posts with `t <= tau`.
pub fn community_dispersion(traj: &MemeTrajectory, tau: f64, communities: &CommunityMap) -> usize {
    let mut seen: HashSet<Option<u32>> = HashSet::new();
    for e in traj.prefix(tau) {
        seen.insert(communities.get(e.source()));
    }
    seen.len()
}

/// Distinct `k_max`-shell sources among posts with `t <= tau`.
pub fn k_core_blogs(traj: &MemeTrajectory, tau: f64, shells: &ShellMap) -> usize {
    traj.sources_by(tau)
        .into_iter()
        .filter(|s| shells.in_kmax_shell(s))
        .count()
}

/// Distinct sensor sources among posts with `t <= tau`.
pub fn es_blogs(traj: &MemeTrajectory, tau: f64, sensors: &HashSet<String>) -> usize {
    traj.sources_by(tau)
        .into_iter()
        .filter(|s| sensors.contains(*s))
        .count()
}

/// Time of the `n`-th post (1-based), if the meme got that far.
pub fn time_to_n(traj: &MemeTrajectory, n: usize) -> Option<f64> {
    if n == 0 {
        return None;
    }
    traj.events.get(n - 1).map(Event::time)
}

/// Everything the network features are computed against.
#[derive(Debug, Clone, Default)]
pub struct NetworkContext {
    pub communities: CommunityMap,
    pub shells: ShellMap,
    pub sensors: HashSet<String>,
}

impl NetworkContext {
    pub fn from_structure<T: Real>(
        g: &Graph,
        partition: &CommunityPartition<T>,
        shells: &KShellIndex,
        sensors: HashSet<String>,
    ) -> Self {
        NetworkContext {
            communities: CommunityMap::from_partition(g, partition),
            shells: ShellMap::from_index(g, shells),
            sensors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FeatureVector<T> {
    pub meme_id: String,
    pub tau_hours: T,
    pub happiness: T,
    pub arousal: T,
    pub dominance: T,
    pub polarity: T,
    pub n_posts: usize,
    pub post_rate: T,
    pub community_dispersion: usize,
    pub k_core_blogs: usize,
    pub es_blogs: usize,
    pub label: MemeLabel,
}

impl<T: Real> FeatureVector<T> {
    /// Feature values in [`FEATURE_NAMES`] order.
    pub fn values(&self) -> [T; 9] {
        [
            self.happiness,
            self.arousal,
            self.dominance,
            self.polarity,
            T::from_count(self.n_posts),
            self.post_rate,
            T::from_count(self.community_dispersion),
            T::from_count(self.k_core_blogs),
            T::from_count(self.es_blogs),
        ]
    }
}

/// Assembles the feature vector of one meme at horizon `tau`.
pub fn extract<T: Real>(
    traj: &MemeTrajectory,
    tau: f64,
    network: &NetworkContext,
    language: [T; 4],
    thresholds: &LabelThresholds,
) -> Result<FeatureVector<T>> {
    let tau_t = T::from_f64(tau).ok_or(Error::ZeroHorizon)?;
    let [happiness, arousal, dominance, polarity] = language;
    Ok(FeatureVector {
        meme_id: traj.meme_id.clone(),
        tau_hours: tau_t,
        happiness,
        arousal,
        dominance,
        polarity,
        n_posts: n_posts(traj, tau),
        post_rate: post_rate(traj, tau_t)?,
        community_dispersion: community_dispersion(traj, tau, &network.communities),
        k_core_blogs: k_core_blogs(traj, tau, &network.shells),
        es_blogs: es_blogs(traj, tau, &network.sensors),
        label: label(traj, thresholds),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use proptest::prelude::*;

    fn traj(times: &[f64]) -> MemeTrajectory {
        let events = times
            .iter()
            .enumerate()
            .map(|(i, &t)| Event(t, format!("s{i}")))
            .collect();
        MemeTrajectory::new("m", events).unwrap()
    }

    fn traj_sources(events: &[(f64, &str)]) -> MemeTrajectory {
        MemeTrajectory::new(
            "m",
            events.iter().map(|&(t, s)| Event(t, s.to_owned())).collect(),
        )
        .unwrap()
    }

    fn sized(n: usize) -> MemeTrajectory {
        traj(&vec![0.0; n])
    }

    #[test]
    fn label_thresholds() {
        let th = LabelThresholds::default();
        assert_eq!(label(&sized(1000), &th), MemeLabel::Successful);
        assert_eq!(label(&sized(100), &th), MemeLabel::Unsuccessful);
        assert_eq!(label(&sized(500), &th), MemeLabel::Excluded);
        assert_eq!(label(&sized(101), &th), MemeLabel::Excluded);
        assert_eq!(label(&sized(999), &th), MemeLabel::Excluded);
        assert!(LabelThresholds { success_min: 10, failure_max: 10 }.validate().is_err());
    }

    #[test]
    fn counting_posts() {
        let t = traj(&[0.0, 3.0, 5.0, 11.0, 20.0]);
        assert_eq!(n_posts(&t, 12.0), 4);
        assert_eq!(n_posts(&t, 0.0), 1);
        assert_eq!(n_posts(&t, 20.0), 5);
        assert_eq!(n_posts(&t, 1e9), 5);
    }

    #[test]
    fn post_rate_examples() {
        let t = traj(&[0.0, 3.0, 5.0, 11.0, 20.0]);
        let r: Ratio<i64> = post_rate(&t, Ratio::from_integer(12)).unwrap();
        assert_eq!(r, Ratio::new(1, 6));
        let rf: f64 = post_rate(&t, 12.0).unwrap();
        assert!((rf - 0.1667).abs() < 1e-4);
        // nothing in (τ/2, τ]
        assert_eq!(post_rate(&t, 50.0f64).unwrap(), 0.0);
        assert_eq!(post_rate(&traj(&[0.0, 0.0, 0.0]), 8.0f64).unwrap(), 0.0);
        let err = post_rate(&t, 0.0f64).unwrap_err();
        assert_eq!(err.to_string(), "rate undefined at τ=0");
    }

    #[test]
    fn dispersion_counts_distinct_communities() {
        let map = CommunityMap::from_pairs([
            ("1".to_owned(), 0),
            ("2".to_owned(), 0),
            ("3".to_owned(), 1),
            ("4".to_owned(), 1),
        ]);
        let t = traj_sources(&[(0.0, "1"), (1.0, "3"), (30.0, "2")]);
        assert_eq!(community_dispersion(&t, 12.0, &map), 2);
        let t = traj_sources(&[(0.0, "1"), (1.0, "2"), (2.0, "1")]);
        assert_eq!(community_dispersion(&t, 12.0, &map), 1);
        // two unknown sources share one synthetic community
        let t = traj_sources(&[(0.0, "x"), (1.0, "y"), (2.0, "1")]);
        assert_eq!(community_dispersion(&t, 12.0, &map), 2);
    }

    #[test]
    fn core_and_sensor_counts_are_distinct_sources() {
        let shells = ShellMap::from_pairs([
            ("a".to_owned(), 3),
            ("b".to_owned(), 3),
            ("c".to_owned(), 1),
        ]);
        let t = traj_sources(&[(0.0, "a"), (1.0, "a"), (2.0, "c"), (3.0, "zz"), (50.0, "b")]);
        assert_eq!(k_core_blogs(&t, 12.0, &shells), 1);
        assert_eq!(k_core_blogs(&t, 100.0, &shells), 2);
        let none = traj_sources(&[(0.0, "c")]);
        assert_eq!(k_core_blogs(&none, 12.0, &shells), 0);

        let empty = HashSet::new();
        assert_eq!(es_blogs(&t, 100.0, &empty), 0);
        let all: HashSet<String> = ["a", "b", "c", "zz"].iter().map(|s| s.to_string()).collect();
        assert_eq!(es_blogs(&t, 12.0, &all), 3);
        assert_eq!(es_blogs(&t, 12.0, &all), t.sources_by(12.0).len());
    }

    #[test]
    fn time_to_nth_post() {
        let t = traj(&[0.0, 3.0, 5.0]);
        assert_eq!(time_to_n(&t, 2), Some(3.0));
        assert_eq!(time_to_n(&t, 4), None);
    }

    #[test]
    fn extract_composes_the_parts() {
        let t = traj_sources(&[(0.0, "a"), (3.0, "b"), (5.0, "c"), (11.0, "a"), (20.0, "d")]);
        let network = NetworkContext {
            communities: CommunityMap::from_pairs([("a".to_owned(), 0), ("b".to_owned(), 1)]),
            shells: ShellMap::from_pairs([("a".to_owned(), 2), ("b".to_owned(), 1)]),
            sensors: ["b".to_owned()].into_iter().collect(),
        };
        let th = LabelThresholds::default();
        let f: FeatureVector<f64> = extract(&t, 12.0, &network, [1.0, 2.0, 3.0, -0.5], &th).unwrap();
        assert_eq!(f.n_posts, n_posts(&t, 12.0));
        assert_eq!(f.post_rate, post_rate(&t, 12.0).unwrap());
        assert_eq!(f.community_dispersion, 3);
        assert_eq!(f.k_core_blogs, 1);
        assert_eq!(f.es_blogs, 1);
        assert_eq!(f.label, MemeLabel::Unsuccessful);
        assert_eq!(f.values()[..4], [1.0, 2.0, 3.0, -0.5]);

        let late: FeatureVector<f64> = extract(&t, 500.0, &network, [0.0; 4], &th).unwrap();
        assert_eq!(late.n_posts, t.total_posts());
        assert_eq!(late.post_rate, 0.0);
    }

    proptest! {
        #[test]
        fn cumulative_features_are_monotone_and_rate_identity_is_exact(
            gaps in proptest::collection::vec(0u32..40, 1..60),
            tau in 1i64..200,
        ) {
            let mut t = 0.0;
            let mut events = vec![Event(0.0, "s0".to_owned())];
            for (i, g) in gaps.iter().enumerate() {
                t += f64::from(*g) * 0.5;
                events.push(Event(t, format!("s{}", i % 7)));
            }
            let traj = MemeTrajectory::new("m", events).unwrap();
            let communities = CommunityMap::from_pairs((0..7).map(|i| (format!("s{i}"), i % 3)));
            let mut prev = (0, 0);
            for h in [1.0, 6.0, 12.0, 24.0, 48.0, 120.0, 1e6] {
                let cur = (n_posts(&traj, h), community_dispersion(&traj, h, &communities));
                prop_assert!(cur.0 >= prev.0 && cur.1 >= prev.1);
                prop_assert!(cur.1 <= cur.0);
                prev = cur;
            }
            let tau_q = Ratio::from_integer(tau);
            let half = tau_q / 2;
            let rate: Ratio<i64> = post_rate(&traj, tau_q).unwrap();
            let lhs = rate * half + Ratio::from_integer(n_posts(&traj, tau as f64 / 2.0) as i64);
            prop_assert_eq!(lhs, Ratio::from_integer(n_posts(&traj, tau as f64) as i64));
        }
    }
}
