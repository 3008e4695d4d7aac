//! Recursive spectral bisection by the leading eigenvector of the generalized
//! modularity matrix.
//!
//! For a group `g` of vertices the generalized modularity matrix is
//! `B⁽ᵍ⁾_ij = B_ij − δ_ij Σ_{k∈g} B_ik`, with `B_ij = A_ij − k_i k_j / 2m`
//! taken over the whole graph. Splitting `g` by the ±1 vector `s` changes the
//! total modularity by `sᵀB⁽ᵍ⁾s / 4m`. The matrix is never formed: products
//! are evaluated as `A_g x − k (kᵀx) / 2m − diag(d) x`.

use std::collections::HashMap;
use std::collections::VecDeque;

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::modularity::modularity_of_labels;
use super::{Graph, VertexId};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DEFAULT_MIN_GAIN: f64 = 1e-6;

const EIGEN_TOL: f64 = 1e-8;
const SETTLE_TOL: f64 = 1e-6;
const LANCZOS_STEPS: usize = 40;
const LANCZOS_MAX_RESTARTS: usize = 200;
const REFINE_MAX_SWEEPS: usize = 100;

/// Vertex → community labels, indexed by [`VertexId`], ids contiguous from 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CommunityPartition<T> {
    pub community: Vec<u32>,
    pub n_communities: usize,
    pub modularity_q: T,
}

impl<T: Real> CommunityPartition<T> {
    /// Wraps arbitrary labels, renumbering them by first appearance in vertex
    /// order and computing `Q`.
    pub fn from_labels(g: &Graph, labels: &[u32]) -> Result<Self> {
        let mut remap = HashMap::new();
        let community: Vec<u32> = labels
            .iter()
            .map(|&c| {
                let next = remap.len() as u32;
                *remap.entry(c).or_insert(next)
            })
            .collect();
        let modularity_q = modularity_of_labels(g, &community)?;
        Ok(CommunityPartition {
            n_communities: remap.len(),
            community,
            modularity_q,
        })
    }

    pub fn community_of(&self, v: VertexId) -> u32 {
        self.community[v as usize]
    }

    /// Members of each community, ascending.
    pub fn members(&self) -> Vec<Vec<VertexId>> {
        let mut out = vec![Vec::new(); self.n_communities];
        for (v, &c) in self.community.iter().enumerate() {
            out[c as usize].push(v as VertexId);
        }
        out
    }
}

/// Partitions `g` into communities by recursive modularity bisection.
///
/// Connected components are the starting groups. A group is split while the
/// best bisection found raises `Q` by more than `min_gain`.
pub fn detect_communities<T: Real>(g: &Graph, min_gain: T) -> Result<CommunityPartition<T>> {
    detect_with_trace(g, min_gain).map(|(p, _)| p)
}

/// Same as [`detect_communities`], also returning `Q` as accumulated from the
/// per-split gains.
pub(crate) fn detect_with_trace<T: Real>(
    g: &Graph,
    min_gain: T,
) -> Result<(CommunityPartition<T>, T)> {
    if min_gain < T::zero() {
        return Err(Error::InvalidParameter(format!(
            "min_gain must be >= 0, got {min_gain}"
        )));
    }
    let n = g.n_vertices();
    if g.n_edges() == 0 {
        if n > 0 {
            warn!("edgeless graph: every vertex is its own community, Q reported as 0");
        }
        let partition = CommunityPartition {
            community: (0..n as u32).collect(),
            n_communities: n,
            modularity_q: T::zero(),
        };
        return Ok((partition, T::zero()));
    }

    let components = g.connected_components();
    let mut labels = vec![0u32; n];
    for (c, members) in components.iter().enumerate() {
        for &v in members {
            labels[v as usize] = c as u32;
        }
    }
    let mut accumulated: T = modularity_of_labels(g, &labels)?;

    let mut bisector = Bisector::new(g);
    let mut queue: VecDeque<Vec<VertexId>> = components.into();
    let mut finished: Vec<Vec<VertexId>> = Vec::new();
    while let Some(group) = queue.pop_front() {
        match bisector.split(&group) {
            Some(split) if split.gain > min_gain => {
                accumulated += split.gain;
                queue.push_back(split.left);
                queue.push_back(split.right);
            }
            _ => finished.push(group),
        }
    }

    finished.sort_by_key(|members| members[0]);
    for (c, members) in finished.iter().enumerate() {
        for &v in members {
            labels[v as usize] = c as u32;
        }
    }
    let modularity_q = modularity_of_labels(g, &labels)?;
    let partition = CommunityPartition {
        community: labels,
        n_communities: finished.len(),
        modularity_q,
    };
    Ok((partition, accumulated))
}

struct Split<T> {
    left: Vec<VertexId>,
    right: Vec<VertexId>,
    gain: T,
}

/// Scratch state reused across bisections of one graph.
struct Bisector<'g> {
    g: &'g Graph,
    local: Vec<u32>,
}

/// A group's view of the graph: in-group adjacency in local indices.
struct GroupMatrix<T> {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    /// global degree k_i
    k: Vec<T>,
    /// diagonal correction d_i = k_i^(g) − k_i K_g / 2m
    d: Vec<T>,
    inv_two_m: T,
}

impl<T: Real> GroupMatrix<T> {
    fn len(&self) -> usize {
        self.k.len()
    }

    fn neighbors(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    /// `out = B⁽ᵍ⁾ x`
    fn apply(&self, x: &[T], out: &mut [T]) {
        let kx: T = self.k.iter().zip(x).map(|(&k, &xi)| k * xi).sum();
        let scale = kx * self.inv_two_m;
        for i in 0..self.len() {
            let mut acc = T::zero();
            for &j in self.neighbors(i) {
                acc += x[j as usize];
            }
            out[i] = acc - self.k[i] * scale - self.d[i] * x[i];
        }
    }

    /// `B⁽ᵍ⁾_ii`
    fn diagonal(&self, i: usize) -> T {
        -self.k[i] * self.k[i] * self.inv_two_m - self.d[i]
    }

    /// Largest absolute row sum, an upper bound on the spectral radius.
    fn row_abs_bound(&self) -> T {
        let total_k: T = self.k.iter().copied().sum();
        let mut bound = T::zero();
        for i in 0..self.len() {
            let ki = self.k[i];
            let mut row = T::zero();
            let mut neighbor_k = T::zero();
            for &j in self.neighbors(i) {
                let kj = self.k[j as usize];
                neighbor_k += kj;
                row += (T::one() - ki * kj * self.inv_two_m).abs();
            }
            let others = (total_k - ki - neighbor_k).max(T::zero());
            row += ki * others * self.inv_two_m;
            row += self.diagonal(i).abs();
            bound = bound.max(row);
        }
        bound
    }
}

impl<'g> Bisector<'g> {
    fn new(g: &'g Graph) -> Self {
        Bisector {
            g,
            local: vec![u32::MAX; g.n_vertices()],
        }
    }

    fn group_matrix<T: Real>(&mut self, group: &[VertexId]) -> GroupMatrix<T> {
        let g = self.g;
        for (i, &v) in group.iter().enumerate() {
            self.local[v as usize] = i as u32;
        }
        let two_m = T::from_count(2 * g.n_edges());
        let inv_two_m = T::one() / two_m;
        let mut offsets = Vec::with_capacity(group.len() + 1);
        offsets.push(0);
        let mut targets = Vec::new();
        let mut k = Vec::with_capacity(group.len());
        for &v in group {
            for &u in g.neighbors(v) {
                let l = self.local[u as usize];
                if l != u32::MAX {
                    targets.push(l);
                }
            }
            offsets.push(targets.len());
            k.push(T::from_count(g.degree(v)));
        }
        for &v in group {
            self.local[v as usize] = u32::MAX;
        }
        let total_k: T = k.iter().copied().sum();
        let d = (0..group.len())
            .map(|i| T::from_count(offsets[i + 1] - offsets[i]) - k[i] * total_k * inv_two_m)
            .collect();
        GroupMatrix {
            offsets,
            targets,
            k,
            d,
            inv_two_m,
        }
    }

    fn split<T: Real>(&mut self, group: &[VertexId]) -> Option<Split<T>> {
        if group.len() < 2 {
            return None;
        }
        let b = self.group_matrix::<T>(group);
        let (vector, eigenvalue) = leading_eigenvector(&b);
        let scale = b.row_abs_bound().max(T::one());
        if eigenvalue <= T::lit(1e-10) * scale {
            return None;
        }
        let mut s: Vec<T> = vector
            .iter()
            .map(|&x| if x >= T::zero() { T::one() } else { -T::one() })
            .collect();
        refine(&b, &mut s);

        let mut bs = vec![T::zero(); b.len()];
        b.apply(&s, &mut bs);
        let quad: T = s.iter().zip(&bs).map(|(&si, &bi)| si * bi).sum();
        let gain = quad * b.inv_two_m / T::lit(2.0);

        let (left, right): (Vec<_>, Vec<_>) = group
            .iter()
            .zip(&s)
            .partition(|(_, &si)| si > T::zero());
        if left.is_empty() || right.is_empty() {
            return None;
        }
        let left: Vec<VertexId> = left.into_iter().map(|(&v, _)| v).collect();
        let right: Vec<VertexId> = right.into_iter().map(|(&v, _)| v).collect();
        Some(Split { left, right, gain })
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Leading (algebraically largest) eigenpair of `B⁽ᵍ⁾` by explicitly
/// restarted Lanczos with full reorthogonalization. Each cycle builds a
/// Krylov basis of at most `LANCZOS_STEPS` vectors from the current
/// estimate, solves the small tridiagonal problem, and restarts from the top
/// Ritz vector. The first cycle starts from the alternating ±1 vector.
/// Returns the unit vector and its Ritz value.
fn leading_eigenvector<T: Real>(b: &GroupMatrix<T>) -> (Vec<T>, T) {
    let n = b.len();
    let scale = b.row_abs_bound().max(T::one());
    let tol = T::lit(EIGEN_TOL).max(T::epsilon() * T::lit(64.0)) * scale;
    // Clustered leading eigenvalues (many similar communities) make the
    // residual converge slowly while the Ritz value has long settled; any
    // vector of the near-degenerate leading space splits equally well.
    let settle = T::lit(SETTLE_TOL) * scale;
    let steps = n.min(LANCZOS_STEPS);
    let norm0 = T::from_count(n).sqrt();
    let mut x: Vec<T> = (0..n)
        .map(|i| if i % 2 == 0 { T::one() } else { -T::one() } / norm0)
        .collect();
    let mut theta = T::neg_infinity();
    let mut w = vec![T::zero(); n];
    for _ in 0..LANCZOS_MAX_RESTARTS {
        let mut basis = vec![x.clone()];
        let mut alpha = Vec::with_capacity(steps);
        let mut beta = Vec::with_capacity(steps);
        let tail = loop {
            let q = basis.last().expect("basis is never empty");
            b.apply(q, &mut w);
            alpha.push(dot(q, &w));
            // One modified Gram-Schmidt pass against the whole basis.
            for v in &basis {
                let c = dot(v, &w);
                w.iter_mut().zip(v).for_each(|(wi, &vi)| *wi -= c * vi);
            }
            let norm = dot(&w, &w).sqrt();
            if basis.len() == steps || norm <= tol {
                break norm;
            }
            beta.push(norm);
            basis.push(w.iter().map(|&wi| wi / norm).collect());
        };
        let k = alpha.len();
        let tri = DMatrix::<f64>::from_fn(k, k, |i, j| {
            let v = if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                T::zero()
            };
            v.to_f64().unwrap_or(f64::NAN)
        });
        let eig = SymmetricEigen::new(tri);
        let top = (0..k).fold(0, |best, i| if eig.eigenvalues[i] > eig.eigenvalues[best] { i } else { best });
        let y = eig.eigenvectors.column(top);
        let mut next = vec![T::zero(); n];
        for (j, v) in basis.iter().enumerate() {
            let c = T::lit(y[j]);
            next.iter_mut().zip(v).for_each(|(xi, &vi)| *xi += c * vi);
        }
        let norm = dot(&next, &next).sqrt();
        if norm > T::zero() {
            next.iter_mut().for_each(|xi| *xi /= norm);
        }
        x = next;
        let previous = theta;
        theta = T::lit(eig.eigenvalues[top]);
        // ‖B x − θ x‖ = β_k |y_k| for the Ritz pair.
        let residual = tail * T::lit(y[k - 1].abs());
        if residual <= tol || k < steps || (theta - previous).abs() <= settle {
            break;
        }
    }
    (x, theta)
}

/// Greedy vertex moving: sweep the vertices in order and flip `s_i` whenever
/// that increases `sᵀB⁽ᵍ⁾s`, repeating sweeps until one makes no move.
/// `B⁽ᵍ⁾s` is kept current in O(degree) per flip.
fn refine<T: Real>(b: &GroupMatrix<T>, s: &mut [T]) {
    let n = b.len();
    let mut adj_s: Vec<T> = (0..n).map(|i| b.neighbors(i).iter().map(|&j| s[j as usize]).sum()).collect();
    let mut ks: T = b.k.iter().zip(s.iter()).map(|(&k, &si)| k * si).sum();
    let eps = T::lit(1e-12) * T::from_count(n.max(1));
    for _ in 0..REFINE_MAX_SWEEPS {
        let mut moved = false;
        for i in 0..n {
            let bs_i = adj_s[i] - b.k[i] * ks * b.inv_two_m - b.d[i] * s[i];
            let gain = b.diagonal(i) - s[i] * bs_i;
            if gain > eps {
                let old = s[i];
                s[i] = -old;
                ks -= (old + old) * b.k[i];
                for &j in b.neighbors(i) {
                    adj_s[j as usize] -= old + old;
                }
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
}

/// Adjusted Rand index between two labelings of the same vertices.
pub fn adjusted_rand_index(a: &[u32], b: &[u32]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let pairs = |x: u64| (x * x.saturating_sub(1) / 2) as f64;
    let mut joint: HashMap<(u32, u32), u64> = HashMap::new();
    let mut rows: HashMap<u32, u64> = HashMap::new();
    let mut cols: HashMap<u32, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = joint.values().map(|&c| pairs(c)).sum();
    let sum_rows: f64 = rows.values().map(|&c| pairs(c)).sum();
    let sum_cols: f64 = cols.values().map(|&c| pairs(c)).sum();
    let total = pairs(n as u64);
    let expected = sum_rows * sum_cols / total;
    let max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index - expected).abs() < f64::EPSILON {
        return if (index - expected).abs() < f64::EPSILON {
            1.0
        } else {
            0.0
        };
    }
    (index - expected) / (max_index - expected)
}
