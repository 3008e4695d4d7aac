//! Synthetic networks with community and core-periphery structure.
//!
//! Construction, in order: a planted partition (independent intra- and
//! inter-block edges), a dense core of sampled vertices attached across all
//! blocks, and a triangle-closing pass for transitivity. Edge sampling skips
//! geometrically over the candidate pair space, so cost is proportional to
//! the number of edges rather than the number of pairs.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::rng::{substream, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkSpec {
    pub n_communities: usize,
    pub community_size: usize,
    pub p_intra: f64,
    pub p_inter: f64,
    pub core_size: usize,
    /// Probability that a core vertex links to any given non-core vertex.
    pub p_core: f64,
    /// Per-edge probability of closing one wedge through it.
    pub p_tri: f64,
    pub seed: u64,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        NetworkSpec {
            n_communities: 12,
            community_size: 250,
            p_intra: 0.04,
            p_inter: 0.0004,
            core_size: 30,
            p_core: 0.02,
            p_tri: 0.1,
            seed: 1,
        }
    }
}

impl NetworkSpec {
    /// Many small blocks joined by very few edges and a thinly attached
    /// core: an outbreak mostly stays in the blocks it starts in, so how
    /// widely a meme is seeded decides how far it goes.
    pub fn seeding_driven() -> Self {
        NetworkSpec {
            n_communities: 40,
            community_size: 100,
            p_intra: 0.1,
            p_inter: 0.000005,
            core_size: 20,
            p_core: 0.0002,
            ..NetworkSpec::default()
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n_communities * self.community_size
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n_communities < 1 {
            return bad("n_communities must be >= 1".into());
        }
        if self.community_size < 2 {
            return bad("community_size must be >= 2".into());
        }
        for (name, p) in [
            ("p_intra", self.p_intra),
            ("p_inter", self.p_inter),
            ("p_core", self.p_core),
            ("p_tri", self.p_tri),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be a probability, got {p}"));
            }
        }
        if !(self.p_inter < self.p_intra) {
            return bad(format!(
                "p_inter ({}) must be below p_intra ({})",
                self.p_inter, self.p_intra
            ));
        }
        if self.core_size > self.n_vertices() {
            return bad(format!(
                "core_size {} exceeds vertex count {}",
                self.core_size,
                self.n_vertices()
            ));
        }
        Ok(())
    }
}

/// A generated graph with its ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticNetwork {
    pub graph: Graph,
    /// Planted block of each vertex.
    pub block: Vec<u32>,
    /// Planted core vertices, ascending.
    pub core: Vec<VertexId>,
    pub spec: NetworkSpec,
}

/// Calls `emit(k)` for each `k` in `0..len` independently with probability `p`.
fn bernoulli_positions(rng: &mut StreamRng, len: u64, p: f64, mut emit: impl FnMut(u64)) {
    if p <= 0.0 || len == 0 {
        return;
    }
    if p >= 1.0 {
        (0..len).for_each(emit);
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut k: u64 = 0;
    loop {
        let u: f64 = rng.random();
        let skip = ((1.0 - u).ln() / log_q).floor();
        if !skip.is_finite() || skip >= (len - k) as f64 {
            return;
        }
        k += skip as u64;
        emit(k);
        k += 1;
        if k >= len {
            return;
        }
    }
}

fn vertex_ids(n: usize) -> Vec<String> {
    let width = n.saturating_sub(1).to_string().len();
    (0..n).map(|i| format!("v{i:0width$}")).collect()
}

pub fn generate_network(spec: &NetworkSpec) -> Result<SyntheticNetwork> {
    spec.validate()?;
    let size = spec.community_size as u64;
    let blocks = spec.n_communities as u64;
    let n = spec.n_vertices();
    let mut edges: Vec<(u32, u32)> = Vec::new();

    let mut rng = substream(spec.seed, "network/intra", 0);
    for b in 0..blocks {
        let base = b * size;
        // Walking pairs in order lets the unranking advance incrementally.
        let (mut row, mut row_start) = (0u64, 0u64);
        bernoulli_positions(&mut rng, size * (size - 1) / 2, spec.p_intra, |r| {
            while r >= row_start + (size - 1 - row) {
                row_start += size - 1 - row;
                row += 1;
            }
            let col = row + 1 + (r - row_start);
            edges.push(((base + row) as u32, (base + col) as u32));
        });
    }

    let mut rng = substream(spec.seed, "network/inter", 0);
    for a in 0..blocks {
        for b in a + 1..blocks {
            bernoulli_positions(&mut rng, size * size, spec.p_inter, |r| {
                let (i, j) = (r / size, r % size);
                edges.push(((a * size + i) as u32, (b * size + j) as u32));
            });
        }
    }

    let mut rng = substream(spec.seed, "network/core", 0);
    let mut core: Vec<VertexId> = sample(&mut rng, n, spec.core_size)
        .into_iter()
        .map(|v| v as VertexId)
        .collect();
    core.sort_unstable();
    let mut is_core = vec![false; n];
    for &c in &core {
        is_core[c as usize] = true;
    }
    let periphery: Vec<u32> = (0..n as u32).filter(|&v| !is_core[v as usize]).collect();
    for (ci, &c) in core.iter().enumerate() {
        for &d in &core[ci + 1..] {
            edges.push((c, d));
        }
        bernoulli_positions(&mut rng, periphery.len() as u64, spec.p_core, |r| {
            edges.push((c, periphery[r as usize]));
        });
    }

    let ids = vertex_ids(n);
    let base = Graph::from_index_edges(ids.clone(), edges.iter().copied());
    let mut rng = substream(spec.seed, "network/triangles", 0);
    for v in base.vertices() {
        let nbrs = base.neighbors(v);
        if nbrs.len() < 2 {
            continue;
        }
        for &u in nbrs {
            if rng.random::<f64>() < spec.p_tri {
                let w = nbrs[rng.random_range(0..nbrs.len())];
                if w != u {
                    edges.push((u, w));
                }
            }
        }
    }
    let graph = Graph::from_index_edges(ids, edges);
    if graph.n_edges() == 0 {
        return Err(Error::InvalidParameter(
            "network parameters produced an edgeless graph".into(),
        ));
    }
    let block = (0..n).map(|v| (v / spec.community_size) as u32).collect();
    Ok(SyntheticNetwork {
        graph,
        block,
        core,
        spec: spec.clone(),
    })
}
