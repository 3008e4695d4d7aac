//! Undirected simple graphs over string vertex ids, plus the two topology
//! decompositions used by the cascade features: k-shells and modularity
//! communities.
//!
//! Vertex ids are kept externally as strings but the graph is stored in
//! compressed sparse row form over dense `u32` indices. Indices are assigned
//! in lexicographic id order, so "smallest index" and "lexicographically
//! smallest id" coincide and every tie-break in this module is reproducible.

mod community;
mod io;
mod kshell;
mod modularity;

use std::collections::HashMap;

pub use community::{
    adjusted_rand_index, detect_communities, CommunityPartition, DEFAULT_MIN_GAIN,
};
pub use io::{load_graph, parse_edge_list, write_edge_list, LoadedGraph};
pub use kshell::{k_shell_decompose, KShellIndex};
pub use modularity::modularity;

pub type VertexId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    ids: Vec<String>,
    index: HashMap<String, VertexId>,
    offsets: Vec<usize>,
    targets: Vec<VertexId>,
}

impl Graph {
    pub fn n_vertices(&self) -> usize {
        self.ids.len()
    }

    /// Number of undirected edges, `m`.
    pub fn n_edges(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, v: VertexId) -> &str {
        &self.ids[v as usize]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<VertexId> {
        self.index.get(id).copied()
    }

    /// Sorted neighbor list of `v`.
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        let v = v as usize;
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        let v = v as usize;
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.ids.len()).map(|v| v as VertexId)
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.vertices().flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    pub fn max_degree(&self) -> usize {
        self.vertices().map(|v| self.degree(v)).max().unwrap_or(0)
    }

    /// Connected components, each a sorted list of vertices, ordered by their
    /// smallest vertex.
    pub fn connected_components(&self) -> Vec<Vec<VertexId>> {
        let n = self.n_vertices();
        let mut seen = vec![false; n];
        let mut components = Vec::new();
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            stack.push(start as VertexId);
            let mut members = Vec::new();
            while let Some(u) = stack.pop() {
                members.push(u);
                for &w in self.neighbors(u) {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        components
    }
}

/// Accumulates vertices and edges, discarding self-loops and duplicates.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    index: HashMap<String, u32>,
    names: Vec<String>,
    edges: Vec<(u32, u32)>,
    self_loops: usize,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, id: &str) -> u32 {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.names.len() as u32;
        self.names.push(id.to_owned());
        self.index.insert(id.to_owned(), i);
        i
    }

    pub fn add_vertex(&mut self, id: &str) -> &mut Self {
        self.intern(id);
        self
    }

    /// Adds the undirected edge `{u, v}`. Self-loops still register the
    /// vertex but contribute no edge.
    pub fn add_edge(&mut self, u: &str, v: &str) -> &mut Self {
        let a = self.intern(u);
        let b = self.intern(v);
        if a == b {
            self.self_loops += 1;
        } else {
            self.edges.push((a.min(b), a.max(b)));
        }
        self
    }

    pub fn self_loops(&self) -> usize {
        self.self_loops
    }

    pub fn build(self) -> Graph {
        let GraphBuilder { names, edges, .. } = self;
        let mut order: Vec<u32> = (0..names.len() as u32).collect();
        order.sort_unstable_by(|&a, &b| names[a as usize].cmp(&names[b as usize]));
        let mut remap = vec![0u32; names.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old as usize] = new as u32;
        }
        let mut names = names;
        let mut ids: Vec<String> = order
            .iter()
            .map(|&old| std::mem::take(&mut names[old as usize]))
            .collect();
        ids.shrink_to_fit();
        let pairs = edges.into_iter().map(|(a, b)| {
            let (a, b) = (remap[a as usize], remap[b as usize]);
            (a.min(b), a.max(b))
        });
        Graph::from_index_edges(ids, pairs)
    }
}

impl Graph {
    /// Builds a graph from ids that are already in lexicographic order and
    /// index-space edges. Self-loops and duplicates are dropped.
    pub(crate) fn from_index_edges(
        ids: Vec<String>,
        pairs: impl IntoIterator<Item = (u32, u32)>,
    ) -> Graph {
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        let n = ids.len();
        let mut edges: Vec<(u32, u32)> = pairs
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        edges.dedup();

        let mut degree = vec![0usize; n];
        for &(a, b) in &edges {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut targets = vec![0u32; 2 * edges.len()];
        for &(a, b) in &edges {
            targets[cursor[a as usize]] = b;
            cursor[a as usize] += 1;
            targets[cursor[b as usize]] = a;
            cursor[b as usize] += 1;
        }
        for v in 0..n {
            targets[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        Graph {
            ids,
            index,
            offsets,
            targets,
        }
    }

    /// Convenience constructor, mostly for tests and small examples.
    pub fn from_edges<'a>(edges: impl IntoIterator<Item = (&'a str, &'a str)>) -> Graph {
        let mut b = GraphBuilder::new();
        for (u, v) in edges {
            b.add_edge(u, v);
        }
        b.build()
    }
}
