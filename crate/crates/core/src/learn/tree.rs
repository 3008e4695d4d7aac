use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Classifier, Dataset, ModelSpec};
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "T: Real")]
pub enum Node<T> {
    Leaf {
        successful: bool,
        n_successful: usize,
        n_total: usize,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
}

/// A binary classification tree stored as a node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Tree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Real> Tree<T> {
    pub fn predict(&self, x: &[T]) -> bool {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { successful, .. } => return *successful,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go<T>(nodes: &[Node<T>], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Grows a CART tree on `rows` (indices into `data`, repeats allowed),
    /// splitting on the Gini-best midpoint threshold until leaves are pure,
    /// unsplittable, or at `max_depth`.
    pub fn fit(data: &Dataset<T>, rows: Vec<usize>, max_depth: Option<usize>) -> Self {
        let mut nodes: Vec<Node<T>> = Vec::new();
        // (rows, depth, slot to write the node into)
        let mut stack = vec![(rows, 0usize, 0usize)];
        nodes.push(placeholder());
        while let Some((rows, depth, slot)) = stack.pop() {
            let pos = rows.iter().filter(|&&r| data.y[r]).count();
            let leaf = Node::Leaf {
                successful: 2 * pos > rows.len(),
                n_successful: pos,
                n_total: rows.len(),
            };
            let pure = pos == 0 || pos == rows.len();
            if pure || max_depth.is_some_and(|d| depth >= d) {
                nodes[slot] = leaf;
                continue;
            }
            match best_split(data, &rows, pos) {
                None => nodes[slot] = leaf,
                Some((feature, threshold)) => {
                    let (l, r): (Vec<usize>, Vec<usize>) =
                        rows.iter().partition(|&&i| data.x[i][feature] <= threshold);
                    let (left, right) = (nodes.len(), nodes.len() + 1);
                    nodes.push(placeholder());
                    nodes.push(placeholder());
                    nodes[slot] = Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    };
                    stack.push((r, depth + 1, right));
                    stack.push((l, depth + 1, left));
                }
            }
        }
        Tree { nodes }
    }
}

fn placeholder<T>() -> Node<T> {
    Node::Leaf {
        successful: false,
        n_successful: 0,
        n_total: 0,
    }
}

/// Gini impurity times node size: `n · (1 − p² − q²) = 2·pos·neg / n`.
fn weighted_gini<T: Real>(pos: usize, n: usize) -> T {
    if n == 0 {
        return T::zero();
    }
    T::lit(2.0) * T::from_count(pos) * T::from_count(n - pos) / T::from_count(n)
}

/// The split with the largest impurity decrease; ties go to the lowest
/// feature index, then the lowest threshold. `None` if every feature is
/// constant on `rows`.
fn best_split<T: Real>(data: &Dataset<T>, rows: &[usize], pos: usize) -> Option<(usize, T)> {
    let n = rows.len();
    let parent = weighted_gini::<T>(pos, n);
    let mut best: Option<(T, usize, T)> = None;
    let mut order = rows.to_vec();
    for f in 0..data.n_features() {
        order.sort_by(|&a, &b| data.x[a][f].partial_cmp(&data.x[b][f]).unwrap_or(std::cmp::Ordering::Equal));
        let mut left_pos = 0usize;
        for i in 0..n - 1 {
            left_pos += usize::from(data.y[order[i]]);
            let (a, b) = (data.x[order[i]][f], data.x[order[i + 1]][f]);
            if !(a < b) {
                continue;
            }
            let left_n = i + 1;
            let gain = parent - weighted_gini::<T>(left_pos, left_n) - weighted_gini::<T>(pos - left_pos, n - left_n);
            if best.as_ref().is_none_or(|(g, _, _)| gain > *g) {
                let mid = (a + b) / T::lit(2.0);
                let threshold = if mid < b { mid } else { a };
                best = Some((gain, f, threshold));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

/// Bagged trees with a majority vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Ensemble<T> {
    pub trees: Vec<Tree<T>>,
}

impl<T: Real> Ensemble<T> {
    /// Fits `spec.n_trees` trees in parallel; tree `i` draws its bootstrap
    /// sample from its own stream, so the result does not depend on
    /// scheduling.
    pub fn fit(data: &Dataset<T>, spec: &ModelSpec, seed: u64) -> Result<Self> {
        data.require_both_classes()?;
        if spec.n_trees < 1 {
            return Err(Error::InvalidParameter("n_trees must be >= 1".into()));
        }
        let n = data.n_rows();
        let trees = (0..spec.n_trees)
            .into_par_iter()
            .map(|i| {
                let rows = if spec.bootstrap {
                    let mut rng = substream(seed, "ensemble/bootstrap", i as u64);
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                Tree::fit(data, rows, spec.max_depth)
            })
            .collect();
        Ok(Ensemble { trees })
    }

    pub fn max_feature_index(&self) -> Option<usize> {
        self.trees
            .iter()
            .flat_map(|t| &t.nodes)
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }
}

impl<T: Real> Classifier<T> for Ensemble<T> {
    /// Fraction of trees voting successful.
    fn score(&self, x: &[T]) -> T {
        let votes = self.trees.iter().filter(|t| t.predict(x)).count();
        T::from_count(votes) / T::from_count(self.trees.len())
    }
}

#[cfg(test)]
mod tests {
    use super::super::testdata::*;
    use super::super::{accuracy, train_ensemble, train_nb, Learner, ModelKind, TrainedModel};
    use super::*;

    #[test]
    fn xor_is_learned_by_the_ensemble_not_by_nb() {
        let train = xor(400, 1);
        let test = xor(400, 2);
        let ens = train_ensemble(&train, 50, None, 3).unwrap();
        let acc = accuracy(&ens, &test);
        assert!(acc >= 0.9, "ensemble {acc}");
        let nb = train_nb(&train).unwrap();
        assert!(accuracy(&nb, &test) < 0.7);
    }

    #[test]
    fn stump_is_the_best_single_threshold() {
        let data = gaussians(40, 1.0, 2, 9);
        let spec = ModelSpec {
            kind: ModelKind::TreeEnsemble,
            n_trees: 1,
            max_depth: Some(1),
            bootstrap: false,
        };
        let model: TrainedModel<f64> = spec.fit(&data, 0).unwrap();
        let super::super::ModelParams::TreeEnsemble(ens) = &model.params else { panic!() };
        assert_eq!(ens.trees[0].depth(), 1);
        // brute force: every feature and midpoint, scored by Gini decrease
        let gini = |rows: &[(f64, bool)]| {
            let n = rows.len() as f64;
            let p = rows.iter().filter(|r| r.1).count() as f64 / n;
            n * (1.0 - p * p - (1.0 - p) * (1.0 - p))
        };
        let mut best: Option<(f64, usize, f64)> = None;
        for f in 0..2 {
            let mut vals: Vec<f64> = data.x.iter().map(|r| r[f]).collect();
            vals.sort_by(f64::total_cmp);
            for w in vals.windows(2) {
                let t = (w[0] + w[1]) / 2.0;
                let side = |left: bool| -> Vec<(f64, bool)> {
                    data.x.iter().zip(&data.y).filter(|(r, _)| (r[f] <= t) == left).map(|(r, &y)| (r[f], y)).collect()
                };
                let cost = gini(&side(true)) + gini(&side(false));
                if best.is_none_or(|(c, _, _)| cost < c - 1e-12) {
                    best = Some((cost, f, t));
                }
            }
        }
        let (_, f, t) = best.unwrap();
        let majority = |left: bool| {
            let ys: Vec<bool> = data.x.iter().zip(&data.y).filter(|(r, _)| (r[f] <= t) == left).map(|(_, &y)| y).collect();
            2 * ys.iter().filter(|&&y| y).count() > ys.len()
        };
        let (l, r) = (majority(true), majority(false));
        for row in &data.x {
            let expected = if row[f] <= t { l } else { r };
            assert_eq!(model.predict(row).unwrap().label == crate::features::MemeLabel::Successful, expected);
        }
    }

    #[test]
    fn unanimous_votes_and_determinism() {
        let data = gaussians(30, 20.0, 1, 3);
        let a = train_ensemble(&data, 20, None, 5).unwrap();
        let b = train_ensemble(&data, 20, None, 5).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        for row in &data.x {
            let s = a.predict(row).unwrap().score;
            assert!(s == 0.0 || s == 1.0);
        }
        let c = train_ensemble(&data, 20, None, 6).unwrap();
        assert_ne!(a.params, c.params);
    }

    #[test]
    fn tree_order_does_not_matter() {
        let data = gaussians(60, 1.0, 3, 8);
        let model = Ensemble::fit(&data, &ModelSpec { n_trees: 25, ..ModelSpec::default() }, 2).unwrap();
        let mut rev = model.clone();
        rev.trees.reverse();
        for row in &data.x {
            assert_eq!(model.score(row), rev.score(row));
        }
    }

    #[test]
    fn unlimited_trees_fit_training_data() {
        let data = gaussians(60, 0.5, 3, 8);
        let spec = ModelSpec { n_trees: 1, bootstrap: false, ..ModelSpec::default() };
        let model: TrainedModel<f64> = spec.fit(&data, 0).unwrap();
        assert_eq!(accuracy(&model, &data), 1.0);
    }
}
