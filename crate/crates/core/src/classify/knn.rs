use serde::{Deserialize, Serialize};

use super::{check_input, check_training};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, Fingerprint};

/// Brute-force k-nearest-neighbor classifier with uniform votes and
/// Euclidean distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    k: usize,
    dim: usize,
    n_labels: usize,
    points: Vec<f64>,
    labels: Vec<usize>,
    fingerprint: Fingerprint,
}

/// Store the training points. `k` must lie in `1..=x.len()`.
pub fn knn_fit(x: &[FeatureVector], y: &[usize], n_labels: usize, k: usize) -> Result<KnnModel> {
    let (dim, fingerprint) = check_training(x, y, n_labels)?;
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if k > x.len() {
        return Err(Error::Config(format!(
            "k = {k} exceeds the {} training points",
            x.len()
        )));
    }
    Ok(KnnModel {
        k,
        dim,
        n_labels,
        points: x.iter().flat_map(|v| v.values().iter().copied()).collect(),
        labels: y.to_vec(),
        fingerprint,
    })
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    /// Training indices of the `k` nearest points, nearest first; equal
    /// distances are ordered by training index.
    pub fn neighbors(&self, x: &FeatureVector) -> Result<Vec<usize>> {
        check_input(x, self.dim, self.fingerprint)?;
        let q = x.values();
        let mut dist: Vec<(f64, usize)> = self
            .points
            .chunks_exact(self.dim.max(1))
            .take(self.labels.len())
            .enumerate()
            .map(|(i, p)| {
                let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2.sqrt(), i)
            })
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, cmp);
            dist.truncate(self.k);
        }
        dist.sort_by(cmp);
        Ok(dist.into_iter().map(|(_, i)| i).collect())
    }

    /// Majority label of the neighbors; equal vote counts go to the label
    /// that comes first in the label set.
    pub fn predict(&self, x: &FeatureVector) -> Result<usize> {
        let mut votes = vec![0usize; self.n_labels];
        for i in self.neighbors(x)? {
            votes[self.labels[i]] += 1;
        }
        let mut best = 0;
        for (l, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = l;
            }
        }
        Ok(best)
    }
}
