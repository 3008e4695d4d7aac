use serde::{Deserialize, Serialize};

use super::{Graph, VertexId};

/// Shell index of every vertex, indexed by [`VertexId`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KShellIndex {
    pub shell: Vec<u32>,
    pub k_max: u32,
}

impl KShellIndex {
    pub fn shell(&self, v: VertexId) -> u32 {
        self.shell[v as usize]
    }

    /// Vertices of the `k_max`-shell, ascending.
    pub fn kmax_shell(&self) -> Vec<VertexId> {
        if self.shell.is_empty() {
            return Vec::new();
        }
        (0..self.shell.len() as VertexId)
            .filter(|&v| self.shell[v as usize] == self.k_max)
            .collect()
    }

    /// The top `ceil(fraction * n)` vertices ranked by shell index, ties
    /// broken by vertex order. At least one vertex when the graph is non-empty.
    pub fn top_fraction(&self, fraction: f64) -> Vec<VertexId> {
        let n = self.shell.len();
        if n == 0 {
            return Vec::new();
        }
        let take = ((fraction * n as f64).ceil() as usize).clamp(1, n);
        let mut order: Vec<VertexId> = (0..n as VertexId).collect();
        order.sort_by(|&a, &b| {
            self.shell[b as usize]
                .cmp(&self.shell[a as usize])
                .then(a.cmp(&b))
        });
        order.truncate(take);
        order.sort_unstable();
        order
    }
}

/// Recursive-removal shell decomposition.
///
/// Stage `k` repeatedly strips every vertex whose remaining degree is at most
/// `k`; the stripped vertices form the `k`-shell. Implemented with the
/// bucket-queue peeling of Batagelj and Zaversnik, O(n + m).
pub fn k_shell_decompose(g: &Graph) -> KShellIndex {
    let n = g.n_vertices();
    if n == 0 {
        return KShellIndex {
            shell: Vec::new(),
            k_max: 0,
        };
    }
    let mut deg: Vec<usize> = (0..n).map(|v| g.degree(v as VertexId)).collect();
    let max_deg = deg.iter().copied().max().unwrap_or(0);

    // bin_start[d] = first slot in `order` holding a vertex of current degree d
    let mut bin_start = vec![0usize; max_deg + 2];
    for &d in &deg {
        bin_start[d + 1] += 1;
    }
    for d in 1..bin_start.len() {
        bin_start[d] += bin_start[d - 1];
    }
    let mut order = vec![0u32; n];
    let mut pos = vec![0usize; n];
    let mut next = bin_start.clone();
    for v in 0..n {
        let d = deg[v];
        pos[v] = next[d];
        order[next[d]] = v as u32;
        next[d] += 1;
    }

    let mut shell = vec![0u32; n];
    for i in 0..n {
        let v = order[i] as usize;
        shell[v] = deg[v] as u32;
        for &u in g.neighbors(v as VertexId) {
            let u = u as usize;
            if deg[u] > deg[v] {
                let du = deg[u];
                let pu = pos[u];
                let pw = bin_start[du];
                let w = order[pw] as usize;
                if u != w {
                    order[pu] = w as u32;
                    pos[w] = pu;
                    order[pw] = u as u32;
                    pos[u] = pw;
                }
                bin_start[du] += 1;
                deg[u] -= 1;
            }
        }
    }
    let k_max = shell.iter().copied().max().unwrap_or(0);
    KShellIndex { shell, k_max }
}
