use super::{CommunityPartition, Graph};
use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

/// Newman modularity of a labeling, `Q = (1/2m) Σ_ij [A_ij − k_i k_j / 2m] δ(c_i, c_j)`.
///
/// Evaluated per community as `Σ_c [L_c / m − (d_c / 2m)²]` where `L_c` is the
/// number of intra-community edges and `d_c` the total degree, which is the
/// same sum regrouped. With two communities this equals `sᵀBs / 4m`.
///
/// Generic over [`Scalar`], so it can be evaluated exactly with rationals.
pub fn modularity_of_labels<T: Scalar>(g: &Graph, labels: &[u32]) -> Result<T> {
    let m = g.n_edges();
    if m == 0 {
        return Err(Error::EdgelessGraph);
    }
    if labels.len() != g.n_vertices() {
        return Err(Error::InvalidParameter(format!(
            "partition covers {} vertices, graph has {}",
            labels.len(),
            g.n_vertices()
        )));
    }
    let n_comm = labels.iter().copied().max().map_or(0, |c| c as usize + 1);
    let mut intra = vec![0usize; n_comm];
    let mut degree = vec![0usize; n_comm];
    for v in g.vertices() {
        let c = labels[v as usize] as usize;
        degree[c] += g.degree(v);
        for &u in g.neighbors(v) {
            if u > v && labels[u as usize] as usize == c {
                intra[c] += 1;
            }
        }
    }
    let m_t = T::from_count(m);
    let two_m = m_t + m_t;
    let mut q = T::zero();
    for c in 0..n_comm {
        let frac = T::from_count(degree[c]) / two_m;
        q = q + T::from_count(intra[c]) / m_t - frac * frac;
    }
    Ok(q)
}

/// Modularity of `partition` on `g`.
pub fn modularity<T: Real>(g: &Graph, partition: &CommunityPartition<T>) -> Result<T> {
    modularity_of_labels(g, &partition.community)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use num_rational::Ratio;
    use proptest::prelude::*;

    type Q = Ratio<i64>;

    /// Direct double summation of the defining formula in exact arithmetic.
    pub(crate) fn direct_q(g: &Graph, labels: &[u32]) -> Q {
        let n = g.n_vertices();
        let m = g.n_edges() as i64;
        let mut total = Q::from_integer(0);
        for i in 0..n as u32 {
            for j in 0..n as u32 {
                if labels[i as usize] != labels[j as usize] {
                    continue;
                }
                let a = i64::from(g.has_edge(i, j));
                let b = Q::from_integer(a)
                    - Q::new((g.degree(i) * g.degree(j)) as i64, 2 * m);
                total += b;
            }
        }
        total / Q::from_integer(2 * m)
    }

    /// `sᵀBs / 4m` for a ±1 vector, exact.
    pub(crate) fn spin_q(g: &Graph, s: &[i64]) -> Q {
        let n = g.n_vertices();
        let m = g.n_edges() as i64;
        let mut total = Q::from_integer(0);
        for i in 0..n as u32 {
            for j in 0..n as u32 {
                let b = Q::from_integer(i64::from(g.has_edge(i, j)))
                    - Q::new((g.degree(i) * g.degree(j)) as i64, 2 * m);
                total += b * s[i as usize] * s[j as usize];
            }
        }
        total / Q::from_integer(4 * m)
    }

    pub(crate) fn two_triangles() -> Graph {
        Graph::from_edges([
            ("a", "b"),
            ("b", "c"),
            ("c", "a"),
            ("d", "e"),
            ("e", "f"),
            ("f", "d"),
            ("c", "d"),
        ])
    }

    fn k4() -> Graph {
        Graph::from_edges([
            ("a", "b"),
            ("a", "c"),
            ("a", "d"),
            ("b", "c"),
            ("b", "d"),
            ("c", "d"),
        ])
    }

    #[test]
    fn single_community_is_zero() {
        let g = two_triangles();
        let q: Q = modularity_of_labels(&g, &[0; 6]).unwrap();
        assert_eq!(q, Q::from_integer(0));
        let qf: f64 = modularity_of_labels(&g, &[0; 6]).unwrap();
        assert_eq!(qf, 0.0);
    }

    #[test]
    fn two_triangles_matches_direct_summation() {
        let g = two_triangles();
        let labels = [0, 0, 0, 1, 1, 1];
        let q: Q = modularity_of_labels(&g, &labels).unwrap();
        assert_eq!(q, direct_q(&g, &labels));
        // (3/7 − 1/4) · 2 = 5/14
        assert_eq!(q, Q::new(5, 14));
        assert_eq!(q, spin_q(&g, &[1, 1, 1, -1, -1, -1]));
        let qf: f64 = modularity_of_labels(&g, &labels).unwrap();
        assert!((qf - 5.0 / 14.0).abs() < 1e-15);
    }

    #[test]
    fn k4_splits_are_negative() {
        let g = k4();
        for labels in [[0, 0, 1, 1], [0, 1, 0, 1], [0, 1, 1, 0]] {
            let q: Q = modularity_of_labels(&g, &labels).unwrap();
            assert_eq!(q, direct_q(&g, &labels));
            assert_eq!(q, Q::new(-1, 6));
            assert!(q < Q::from_integer(0));
        }
    }

    #[test]
    fn edgeless_is_an_error() {
        let g = Graph::from_edges([("a", "a")]);
        let err = modularity_of_labels::<f64>(&g, &[0]).unwrap_err();
        assert_eq!(err.to_string(), "modularity undefined on edgeless graph");
    }

    #[test]
    fn generic_over_f32() {
        let q: f32 = modularity_of_labels(&two_triangles(), &[0, 0, 0, 1, 1, 1]).unwrap();
        assert!((q - 5.0 / 14.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn matches_direct_sum_and_ignores_relabeling(
            raw in proptest::collection::vec((0u32..12, 0u32..12), 1..40),
            labels in proptest::collection::vec(0u32..4, 12),
        ) {
            let ids: Vec<String> = (0..12).map(|i| format!("v{i:02}")).collect();
            let g = Graph::from_index_edges(ids, raw);
            prop_assume!(g.n_edges() > 0);
            let q: Q = modularity_of_labels(&g, &labels).unwrap();
            prop_assert_eq!(q, direct_q(&g, &labels));
            let relabeled: Vec<u32> = labels.iter().map(|&c| 3 - c).collect();
            let q2: Q = modularity_of_labels(&g, &relabeled).unwrap();
            prop_assert_eq!(q, q2);
            prop_assert!(q >= Q::from_integer(-1) && q <= Q::from_integer(1));
        }
    }
}
