use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::network::SyntheticNetwork;
use crate::error::{Error, Result};
use crate::features::{Event, MemeTrajectory};
use crate::graph::{k_shell_decompose, CommunityPartition, Graph, KShellIndex, VertexId};
use crate::rng::{substream, StreamRng};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedStrategy {
    /// One seed per community, cycling through communities in random order.
    DispersedCommunities,
    /// All seeds inside one randomly chosen community.
    ConcentratedCommunity,
    /// Seeds drawn from the network core.
    Core,
    /// Seeds drawn from the low-shell periphery.
    Periphery,
    Uniform,
}

impl SeedStrategy {
    pub const ALL: [SeedStrategy; 5] = [
        SeedStrategy::DispersedCommunities,
        SeedStrategy::ConcentratedCommunity,
        SeedStrategy::Core,
        SeedStrategy::Periphery,
        SeedStrategy::Uniform,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeSpec {
    pub transmit_prob: f64,
    pub n_seeds: usize,
    pub seed_strategy: SeedStrategy,
    /// Hours between cascade generations.
    pub dt_hours: f64,
    pub rng_seed: u64,
}

impl CascadeSpec {
    pub fn validate(&self, n_vertices: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.transmit_prob) {
            return Err(Error::InvalidParameter(format!(
                "transmit_prob must be a probability, got {}",
                self.transmit_prob
            )));
        }
        if self.n_seeds < 1 || self.n_seeds > n_vertices {
            return Err(Error::InvalidParameter(format!(
                "n_seeds must be in 1..={n_vertices}, got {}",
                self.n_seeds
            )));
        }
        if !(self.dt_hours > 0.0 && self.dt_hours.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dt_hours must be positive, got {}",
                self.dt_hours
            )));
        }
        Ok(())
    }
}

/// A graph annotated with the structure the seeding strategies need.
#[derive(Debug, Clone)]
pub struct Substrate<'g> {
    pub graph: &'g Graph,
    /// Non-core members of each community.
    communities: Vec<Vec<VertexId>>,
    core: Vec<VertexId>,
    periphery: Vec<VertexId>,
}

impl<'g> Substrate<'g> {
    /// Uses the planted blocks and planted core of a generated network.
    pub fn from_network(net: &'g SyntheticNetwork) -> Self {
        let shells = k_shell_decompose(&net.graph);
        Self::build(&net.graph, &net.block, net.core.clone(), &shells)
    }

    /// Uses detected communities and the `k_max`-shell as the core.
    pub fn from_decomposition<T: Real>(
        graph: &'g Graph,
        partition: &CommunityPartition<T>,
        shells: &KShellIndex,
    ) -> Self {
        Self::build(graph, &partition.community, shells.kmax_shell(), shells)
    }

    fn build(graph: &'g Graph, labels: &[u32], core: Vec<VertexId>, shells: &KShellIndex) -> Self {
        let n = graph.n_vertices();
        let mut is_core = vec![false; n];
        for &c in &core {
            is_core[c as usize] = true;
        }
        let n_comm = labels.iter().copied().max().map_or(0, |c| c as usize + 1);
        let mut communities = vec![Vec::new(); n_comm];
        for v in graph.vertices() {
            if !is_core[v as usize] {
                communities[labels[v as usize] as usize].push(v);
            }
        }
        communities.retain(|c| !c.is_empty());
        // Periphery: the lower half of non-core vertices ranked by shell.
        let mut ranked: Vec<VertexId> = graph.vertices().filter(|&v| !is_core[v as usize]).collect();
        ranked.sort_by_key(|&v| (shells.shell(v), v));
        ranked.truncate(ranked.len().div_ceil(2));
        ranked.sort_unstable();
        Substrate {
            graph,
            communities,
            core,
            periphery: ranked,
        }
    }

    pub fn core(&self) -> &[VertexId] {
        &self.core
    }

    pub fn periphery(&self) -> &[VertexId] {
        &self.periphery
    }

    pub fn n_communities(&self) -> usize {
        self.communities.len()
    }

    fn pick_from(pool: &[VertexId], k: usize, rng: &mut StreamRng) -> Vec<VertexId> {
        let k = k.min(pool.len());
        sample(rng, pool.len(), k).into_iter().map(|i| pool[i]).collect()
    }

    /// Chooses `spec.n_seeds` distinct seeds. A strategy whose pool is too
    /// small is topped up with uniformly drawn vertices.
    pub fn choose_seeds(&self, spec: &CascadeSpec, rng: &mut StreamRng) -> Vec<VertexId> {
        let k = spec.n_seeds;
        let mut seeds = match spec.seed_strategy {
            SeedStrategy::Uniform => {
                let all: Vec<VertexId> = self.graph.vertices().collect();
                Self::pick_from(&all, k, rng)
            }
            SeedStrategy::Core => Self::pick_from(&self.core, k, rng),
            SeedStrategy::Periphery => Self::pick_from(&self.periphery, k, rng),
            SeedStrategy::ConcentratedCommunity => {
                let fits: Vec<usize> = (0..self.communities.len())
                    .filter(|&c| self.communities[c].len() >= k)
                    .collect();
                let c = if fits.is_empty() {
                    (0..self.communities.len())
                        .max_by_key(|&c| (self.communities[c].len(), std::cmp::Reverse(c)))
                        .unwrap_or(0)
                } else {
                    fits[rng.random_range(0..fits.len())]
                };
                self.communities
                    .get(c)
                    .map_or_else(Vec::new, |pool| Self::pick_from(pool, k, rng))
            }
            SeedStrategy::DispersedCommunities => {
                let mut order: Vec<usize> = (0..self.communities.len()).collect();
                order.shuffle(rng);
                let mut pools: Vec<Vec<VertexId>> = self.communities.clone();
                let mut out = Vec::with_capacity(k);
                let mut i = 0;
                while out.len() < k && pools.iter().any(|p| !p.is_empty()) {
                    let pool = &mut pools[order[i % order.len()]];
                    if !pool.is_empty() {
                        let j = rng.random_range(0..pool.len());
                        out.push(pool.swap_remove(j));
                    }
                    i += 1;
                }
                out
            }
        };
        if seeds.len() < k {
            let mut taken = vec![false; self.graph.n_vertices()];
            for &s in &seeds {
                taken[s as usize] = true;
            }
            let rest: Vec<VertexId> = self.graph.vertices().filter(|&v| !taken[v as usize]).collect();
            let need = k - seeds.len();
            seeds.extend(Self::pick_from(&rest, need, rng));
        }
        seeds
    }
}

/// Discrete-time independent cascade.
///
/// Seeds activate in generation 0. Each vertex activated in generation `r`
/// gets one chance, with probability `transmit_prob`, to activate each still
/// inactive neighbor in generation `r + 1`. The `i`-th activation of a
/// generation with `a` activations posts at `r·dt + i·dt/(a+1)`.
pub fn simulate_cascade(
    substrate: &Substrate<'_>,
    spec: &CascadeSpec,
    meme_id: &str,
) -> Result<MemeTrajectory> {
    let g = substrate.graph;
    spec.validate(g.n_vertices())?;
    let mut rng = substream(spec.rng_seed, "cascade", 0);
    let seeds = substrate.choose_seeds(spec, &mut rng);

    let mut active = vec![false; g.n_vertices()];
    for &s in &seeds {
        active[s as usize] = true;
    }
    let mut events = Vec::new();
    let mut frontier = seeds;
    let mut generation = 0u64;
    while !frontier.is_empty() {
        let base = generation as f64 * spec.dt_hours;
        let step = spec.dt_hours / (frontier.len() + 1) as f64;
        for (i, &v) in frontier.iter().enumerate() {
            events.push(Event(base + i as f64 * step, g.id(v).to_owned()));
        }
        let mut next = Vec::new();
        for &u in &frontier {
            for &w in g.neighbors(u) {
                if !active[w as usize] && rng.random::<f64>() < spec.transmit_prob {
                    active[w as usize] = true;
                    next.push(w);
                }
            }
        }
        frontier = next;
        generation += 1;
    }
    MemeTrajectory::new(meme_id, events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::network::{generate_network, NetworkSpec};
    use std::collections::HashSet;

    fn net() -> SyntheticNetwork {
        generate_network(&NetworkSpec {
            n_communities: 6,
            community_size: 60,
            p_intra: 0.1,
            p_inter: 0.002,
            core_size: 12,
            p_core: 0.1,
            ..NetworkSpec::default()
        })
        .unwrap()
    }

    fn spec(p: f64, k: usize, strategy: SeedStrategy) -> CascadeSpec {
        CascadeSpec {
            transmit_prob: p,
            n_seeds: k,
            seed_strategy: strategy,
            dt_hours: 4.0,
            rng_seed: 9,
        }
    }

    #[test]
    fn zero_transmission_emits_only_seeds() {
        let n = net();
        let sub = Substrate::from_network(&n);
        for strategy in SeedStrategy::ALL {
            let t = simulate_cascade(&sub, &spec(0.0, 5, strategy), "m").unwrap();
            assert_eq!(t.total_posts(), 5);
            assert!(t.events.iter().all(|e| e.0 < 4.0));
            assert_eq!(t.events[0].0, 0.0);
        }
    }

    #[test]
    fn full_transmission_reaches_the_component_once() {
        let g = Graph::from_edges([("a", "b"), ("b", "c"), ("c", "d"), ("d", "a"), ("d", "e")]);
        let shells = k_shell_decompose(&g);
        let part = CommunityPartition::<f64>::from_labels(&g, &[0; 5]).unwrap();
        let sub = Substrate::from_decomposition(&g, &part, &shells);
        let t = simulate_cascade(&sub, &spec(1.0, 1, SeedStrategy::Uniform), "m").unwrap();
        let sources: HashSet<_> = t.events.iter().map(|e| e.1.clone()).collect();
        assert_eq!(t.total_posts(), 5);
        assert_eq!(sources.len(), 5);
    }

    #[test]
    fn events_strictly_ordered_and_unique() {
        let n = net();
        let sub = Substrate::from_network(&n);
        for seed in 0..20 {
            let s = CascadeSpec { rng_seed: seed, ..spec(0.15, 3, SeedStrategy::Uniform) };
            let t = simulate_cascade(&sub, &s, "m").unwrap();
            assert!(t.events.windows(2).all(|w| w[0].0 < w[1].0));
            let distinct: HashSet<_> = t.events.iter().map(|e| &e.1).collect();
            assert_eq!(distinct.len(), t.total_posts());
        }
    }

    #[test]
    fn seeding_strategies_respect_their_pools() {
        let n = net();
        let sub = Substrate::from_network(&n);
        let mut rng = substream(1, "t", 0);
        let core: HashSet<_> = sub.core().iter().copied().collect();
        let seeds = sub.choose_seeds(&spec(0.1, 5, SeedStrategy::Core), &mut rng);
        assert!(seeds.iter().all(|s| core.contains(s)));

        let seeds = sub.choose_seeds(&spec(0.1, 5, SeedStrategy::DispersedCommunities), &mut rng);
        let blocks: HashSet<_> = seeds.iter().map(|&s| n.block[s as usize]).collect();
        assert_eq!(blocks.len(), 5);

        let seeds = sub.choose_seeds(&spec(0.1, 5, SeedStrategy::ConcentratedCommunity), &mut rng);
        let blocks: HashSet<_> = seeds.iter().map(|&s| n.block[s as usize]).collect();
        assert_eq!(blocks.len(), 1);

        let periphery: HashSet<_> = sub.periphery().iter().copied().collect();
        let seeds = sub.choose_seeds(&spec(0.1, 5, SeedStrategy::Periphery), &mut rng);
        assert!(seeds.iter().all(|s| periphery.contains(s) && !core.contains(s)));
    }

    #[test]
    fn small_pools_are_topped_up() {
        let n = net();
        let sub = Substrate::from_network(&n);
        let mut rng = substream(1, "t", 0);
        let seeds = sub.choose_seeds(&spec(0.1, 40, SeedStrategy::Core), &mut rng);
        let distinct: HashSet<_> = seeds.iter().collect();
        assert_eq!(distinct.len(), 40);
    }

    #[test]
    fn deterministic_and_validated() {
        let n = net();
        let sub = Substrate::from_network(&n);
        let s = spec(0.12, 4, SeedStrategy::DispersedCommunities);
        assert_eq!(
            simulate_cascade(&sub, &s, "m").unwrap(),
            simulate_cascade(&sub, &s, "m").unwrap()
        );
        assert!(simulate_cascade(&sub, &spec(0.1, 0, SeedStrategy::Uniform), "m").is_err());
        assert!(simulate_cascade(&sub, &spec(1.5, 1, SeedStrategy::Uniform), "m").is_err());
    }
}
