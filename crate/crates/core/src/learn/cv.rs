use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{accuracy, Classifier, Dataset, Learner};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, substream};
use crate::scalar::Real;

/// Column permutations averaged per feature in permutation importance.
pub const DEFAULT_PERMUTATIONS: usize = 10;

/// Assigns every row to one of `k` test folds, dealing each class's shuffled
/// rows round-robin so class proportions are preserved.
pub fn stratified_folds(y: &[bool], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Stratification {
            k,
            detail: "need at least 2 folds".into(),
        });
    }
    if k > y.len() {
        return Err(Error::Stratification {
            k,
            detail: format!("only {} rows", y.len()),
        });
    }
    let mut rng = substream(seed, "cv/folds", 0);
    let mut fold = vec![0usize; y.len()];
    let mut next = 0usize;
    for class in [false, true] {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if members.len() < 2 {
            return Err(Error::Stratification {
                k,
                detail: format!(
                    "class {} has {} rows; every training fold needs both classes",
                    if class { "successful" } else { "unsuccessful" },
                    members.len()
                ),
            });
        }
        members.shuffle(&mut rng);
        for i in members {
            fold[i] = next % k;
            next += 1;
        }
    }
    Ok(fold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    /// Mean of the per-fold accuracies.
    pub accuracy: f64,
    pub fold_accuracies: Vec<f64>,
    /// Test fold of every row.
    pub fold_of: Vec<usize>,
}

fn split(data_len: usize, fold_of: &[usize], f: usize) -> (Vec<usize>, Vec<usize>) {
    (0..data_len).partition(|&i| fold_of[i] != f)
}

/// Stratified k-fold cross-validation; fold `f` is fitted with its own
/// derived seed, and folds run in parallel.
pub fn cross_validate<T: Real, L: Learner<T> + Sync>(
    data: &Dataset<T>,
    learner: &L,
    k: usize,
    seed: u64,
) -> Result<CvResult> {
    data.require_both_classes()?;
    let fold_of = stratified_folds(&data.y, k, seed)?;
    let fold_accuracies = (0..k)
        .into_par_iter()
        .map(|f| {
            let (train, test) = split(data.n_rows(), &fold_of, f);
            let model = learner.fit(&data.subset(&train), derive_seed(seed, "cv/fit", f as u64))?;
            Ok(accuracy(&model, &data.subset(&test)))
        })
        .collect::<Result<Vec<f64>>>()?;
    let accuracy = fold_accuracies.iter().sum::<f64>() / k as f64;
    Ok(CvResult {
        accuracy,
        fold_accuracies,
        fold_of,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub feature: String,
    /// Mean accuracy drop when the column is permuted.
    pub importance: f64,
}

fn importance_raw<T: Real>(model: &(impl Classifier<T> + Sync), data: &Dataset<T>, n_perm: usize, seed: u64) -> Vec<f64> {
    let base = accuracy(model, data);
    (0..data.n_features())
        .into_par_iter()
        .map(|j| {
            let mut rng = substream(seed, "importance", j as u64);
            let mut column: Vec<T> = data.x.iter().map(|r| r[j]).collect();
            let mut shuffled = data.clone();
            let mut drop = 0.0;
            for _ in 0..n_perm {
                column.shuffle(&mut rng);
                for (row, &v) in shuffled.x.iter_mut().zip(&column) {
                    row[j] = v;
                }
                drop += base - accuracy(model, &shuffled);
            }
            drop / n_perm.max(1) as f64
        })
        .collect()
}

/// Sorted descending; equal importances keep feature-column order.
fn ranked(names: &[String], values: Vec<f64>) -> Vec<Importance> {
    let mut out: Vec<Importance> = names
        .iter()
        .zip(values)
        .map(|(n, v)| Importance {
            feature: n.clone(),
            importance: v,
        })
        .collect();
    // stable sort keeps column order on ties
    out.sort_by(|a, b| b.importance.total_cmp(&a.importance));
    out
}

/// Permutation importance of `model` on `data`.
pub fn permutation_importance<T: Real>(
    model: &(impl Classifier<T> + Sync),
    data: &Dataset<T>,
    n_perm: usize,
    seed: u64,
) -> Vec<Importance> {
    ranked(&data.feature_names, importance_raw(model, data, n_perm, seed))
}

/// Permutation importance measured on held-out folds: each fold's model is
/// scored on its own test rows, and the drops are averaged over folds.
pub fn cv_permutation_importance<T: Real, L: Learner<T> + Sync>(
    data: &Dataset<T>,
    learner: &L,
    k: usize,
    n_perm: usize,
    seed: u64,
) -> Result<Vec<Importance>> {
    data.require_both_classes()?;
    let fold_of = stratified_folds(&data.y, k, seed)?;
    let per_fold = (0..k)
        .into_par_iter()
        .map(|f| {
            let (train, test) = split(data.n_rows(), &fold_of, f);
            let model = learner.fit(&data.subset(&train), derive_seed(seed, "cv/fit", f as u64))?;
            Ok(importance_raw(&model, &data.subset(&test), n_perm, derive_seed(seed, "cv/importance", f as u64)))
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let mut mean = vec![0.0; data.n_features()];
    for fold in &per_fold {
        for (m, v) in mean.iter_mut().zip(fold) {
            *m += v / k as f64;
        }
    }
    Ok(ranked(&data.feature_names, mean))
}

/// `fold,accuracy` rows followed by a `mean` summary row.
pub fn write_cv_csv(result: &CvResult, mut out: impl Write) -> Result<()> {
    let io = |e| Error::io("<output>", e);
    writeln!(out, "# memewatch cv schema_version={}", super::MODEL_SCHEMA_VERSION).map_err(io)?;
    writeln!(out, "fold,accuracy").map_err(io)?;
    for (f, a) in result.fold_accuracies.iter().enumerate() {
        writeln!(out, "{f},{a}").map_err(io)?;
    }
    writeln!(out, "mean,{}", result.accuracy).map_err(io)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::testdata::*;
    use super::super::{ModelKind, ModelSpec};
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    /// Always answers the same class.
    struct Constant(bool);
    struct ConstantModel(bool);
    impl Classifier<f64> for ConstantModel {
        fn score(&self, _: &[f64]) -> f64 {
            if self.0 {
                1.0
            } else {
                0.0
            }
        }
    }
    impl Learner<f64> for Constant {
        type Model = ConstantModel;
        fn fit(&self, _: &Dataset<f64>, _: u64) -> Result<ConstantModel> {
            Ok(ConstantModel(self.0))
        }
    }

    #[test]
    fn guessing_one_class_on_balanced_data_is_half() {
        let data = gaussians(100, 3.0, 2, 1);
        for guess in [true, false] {
            let r = cross_validate(&data, &Constant(guess), 10, 4).unwrap();
            assert!((r.accuracy - 0.5).abs() < 1e-12);
            assert_eq!(r.fold_accuracies.len(), 10);
        }
    }

    #[test]
    fn separable_data_cross_validates_well() {
        let data = gaussians(100, 12.0, 3, 2);
        for kind in [ModelKind::NaiveBayes, ModelKind::TreeEnsemble] {
            let spec = ModelSpec { kind, n_trees: 30, ..ModelSpec::default() };
            let r = cross_validate(&data, &spec, 10, 1).unwrap();
            assert!(r.accuracy >= 0.95, "{kind:?} {}", r.accuracy);
            let mean = r.fold_accuracies.iter().sum::<f64>() / 10.0;
            assert!((mean - r.accuracy).abs() < 1e-12);
        }
    }

    #[test]
    fn leave_one_out() {
        let data = gaussians(12, 5.0, 2, 3);
        let spec = ModelSpec { kind: ModelKind::NaiveBayes, ..ModelSpec::default() };
        let r = cross_validate(&data, &spec, data.n_rows(), 1).unwrap();
        assert_eq!(r.fold_accuracies.len(), 24);
        assert!(r.fold_accuracies.iter().all(|&a| a == 0.0 || a == 1.0));
    }

    #[test]
    fn stratification_errors() {
        assert!(stratified_folds(&[true, false, true], 1, 0).is_err());
        assert!(stratified_folds(&[true, false, true], 4, 0).is_err());
        assert!(stratified_folds(&[true, false, false, false], 2, 0).is_err());
    }

    #[test]
    fn cv_is_deterministic() {
        let data = gaussians(40, 1.0, 2, 3);
        let spec = ModelSpec { n_trees: 10, ..ModelSpec::default() };
        assert_eq!(cross_validate(&data, &spec, 5, 9).unwrap(), cross_validate(&data, &spec, 5, 9).unwrap());
    }

    #[test]
    fn importance_finds_the_only_informative_feature() {
        // label = threshold on feature 3 of 5 uniform features
        let mut rng = substream(2, "t", 0);
        let mk = |rng: &mut crate::rng::StreamRng, n: usize| {
            let x: Vec<Vec<f64>> = (0..n).map(|_| (0..5).map(|_| rng.random::<f64>()).collect()).collect();
            let y = x.iter().map(|r| r[3] > 0.5).collect();
            Dataset::new(names(5), (0..n).map(|i| i.to_string()).collect(), x, y).unwrap()
        };
        let train = mk(&mut rng, 300);
        let test = mk(&mut rng, 300);
        let model = ModelSpec { n_trees: 30, ..ModelSpec::default() }.fit(&train, 1).unwrap();
        let imp = permutation_importance(&model, &test, DEFAULT_PERMUTATIONS, 3);
        assert_eq!(imp[0].feature, "f3");
        assert!(imp[0].importance > 0.3);
        assert!(imp[1..].iter().all(|i| i.importance.abs() < 0.05));
        let cv = cv_permutation_importance(&train, &ModelSpec { n_trees: 20, ..ModelSpec::default() }, 5, 5, 1).unwrap();
        assert_eq!(cv[0].feature, "f3");
    }

    #[test]
    fn importance_of_noise_is_near_zero() {
        let train = gaussians(150, 0.0, 3, 4);
        let test = gaussians(150, 0.0, 3, 5);
        let model = ModelSpec { kind: ModelKind::NaiveBayes, ..ModelSpec::default() }.fit(&train, 1).unwrap();
        for i in permutation_importance(&model, &test, DEFAULT_PERMUTATIONS, 3) {
            assert!(i.importance.abs() < 0.06, "{i:?}");
        }
        // ties keep column order
        let tied = ranked(&names(3), vec![0.0, 0.0, 0.0]);
        assert_eq!(tied.iter().map(|i| i.feature.as_str()).collect::<Vec<_>>(), ["f0", "f1", "f2"]);
    }

    #[test]
    fn cv_report_layout() {
        let r = CvResult { accuracy: 0.75, fold_accuracies: vec![0.5, 1.0], fold_of: vec![] };
        let mut buf = Vec::new();
        write_cv_csv(&r, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# memewatch cv schema_version=1\nfold,accuracy\n0,0.5\n1,1\nmean,0.75\n");
    }

    proptest! {
        #[test]
        fn folds_partition_the_rows(labels in proptest::collection::vec(any::<bool>(), 4..80), k in 2usize..12, seed in any::<u64>()) {
            let [neg, pos] = [labels.iter().filter(|&&b| !b).count(), labels.iter().filter(|&&b| b).count()];
            prop_assume!(neg >= 2 && pos >= 2 && k <= labels.len());
            let folds = stratified_folds(&labels, k, seed).unwrap();
            prop_assert_eq!(folds.len(), labels.len());
            prop_assert!(folds.iter().all(|&f| f < k));
            // per-class fold counts differ by at most one
            for class in [false, true] {
                let mut c = vec![0usize; k];
                for (i, &f) in folds.iter().enumerate() {
                    if labels[i] == class { c[f] += 1; }
                }
                prop_assert!(c.iter().max().unwrap() - c.iter().min().unwrap() <= 1);
            }
        }
    }
}
