use serde::{Deserialize, Serialize};

use super::{Classifier, Dataset};
use crate::error::Result;
use crate::scalar::Real;

/// Relative variance floor: each class variance gets
/// `VAR_FLOOR * (global variance + 1e-12)` added.
pub const VAR_FLOOR: f64 = 1e-9;

/// Gaussian naive Bayes; index 0 is the unsuccessful class, 1 successful.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GaussianNb<T> {
    pub means: [Vec<T>; 2],
    pub variances: [Vec<T>; 2],
    pub log_priors: [T; 2],
}

fn mean_var<T: Real>(values: impl Iterator<Item = T> + Clone) -> (T, T) {
    let n = T::from_count(values.clone().count());
    let mean = values.clone().sum::<T>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<T>() / n;
    (mean, var)
}

impl<T: Real> GaussianNb<T> {
    pub fn fit(data: &Dataset<T>) -> Result<Self> {
        data.require_both_classes()?;
        let d = data.n_features();
        let counts = data.class_counts();
        let mut means = [vec![T::zero(); d], vec![T::zero(); d]];
        let mut variances = [vec![T::zero(); d], vec![T::zero(); d]];
        for j in 0..d {
            let (_, global) = mean_var(data.x.iter().map(|r| r[j]));
            let floor = T::lit(VAR_FLOOR) * (global + T::lit(1e-12));
            for (c, class) in [false, true].into_iter().enumerate() {
                let col = data.x.iter().zip(&data.y).filter(|(_, &y)| y == class).map(|(r, _)| r[j]);
                let (m, v) = mean_var(col);
                means[c][j] = m;
                variances[c][j] = v + floor;
            }
        }
        let n = T::from_count(data.n_rows());
        let log_priors = [
            (T::from_count(counts[0]) / n).ln(),
            (T::from_count(counts[1]) / n).ln(),
        ];
        Ok(GaussianNb {
            means,
            variances,
            log_priors,
        })
    }

    pub fn n_features(&self) -> usize {
        self.means[0].len()
    }

    fn log_joint(&self, c: usize, x: &[T]) -> T {
        let two = T::lit(2.0);
        let tau = T::lit(std::f64::consts::TAU);
        x.iter().enumerate().fold(self.log_priors[c], |acc, (j, &v)| {
            let var = self.variances[c][j];
            let dev = v - self.means[c][j];
            acc - (tau * var).ln() / two - dev * dev / (two * var)
        })
    }
}

impl<T: Real> Classifier<T> for GaussianNb<T> {
    /// Posterior probability of the successful class.
    fn score(&self, x: &[T]) -> T {
        let diff = self.log_joint(0, x) - self.log_joint(1, x);
        T::one() / (T::one() + diff.exp())
    }
}
