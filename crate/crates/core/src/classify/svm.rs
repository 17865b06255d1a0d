use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{check_input, check_training};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, Fingerprint};
use crate::select::argmax;
use crate::util::rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            epochs: 1000,
            seed: 0,
        }
    }
}

/// One-vs-rest linear SVM: one weight vector and bias per label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    config: SvmConfig,
    fingerprint: Fingerprint,
}

/// Fit each binary hinge-loss problem with Pegasos stochastic subgradient
/// steps of size `1/(λt)`, `λ = 1/(C n)`. The bias is learned as the weight
/// of a constant feature. All labels share one seeded visiting order.
pub fn svm_fit(x: &[FeatureVector], y: &[usize], n_labels: usize, config: &SvmConfig) -> Result<LinearSvmModel> {
    let (dim, fingerprint) = check_training(x, y, n_labels)?;
    if y.iter().collect::<BTreeSet<_>>().len() < 2 {
        return Err(Error::Config("SVM training needs at least two distinct labels".into()));
    }
    if !(config.c > 0.0 && config.c.is_finite()) {
        return Err(Error::Config("SVM C must be positive".into()));
    }
    let n = x.len();
    let inv_lambda = config.c * n as f64;
    // u[l] = t · w_t for label l, over the feature vector extended by 1.
    let mut u = vec![vec![0.0; dim + 1]; n_labels];
    let mut order: Vec<usize> = (0..n).collect();
    let mut r = rng(config.seed);
    let mut t = 0u64;
    for _ in 0..config.epochs {
        order.shuffle(&mut r);
        for &i in &order {
            let xi = x[i].values();
            for (l, ul) in u.iter_mut().enumerate() {
                let sign = if y[i] == l { 1.0 } else { -1.0 };
                let violated = t == 0 || {
                    let score: f64 = ul[..dim].iter().zip(xi).map(|(a, b)| a * b).sum::<f64>() + ul[dim];
                    sign * score / (t as f64) < 1.0
                };
                if violated {
                    let step = sign * inv_lambda;
                    for (a, b) in ul[..dim].iter_mut().zip(xi) {
                        *a += step * b;
                    }
                    ul[dim] += step;
                }
            }
            t += 1;
        }
    }
    let scale = 1.0 / t.max(1) as f64;
    let mut weights = Vec::with_capacity(n_labels);
    let mut bias = Vec::with_capacity(n_labels);
    for mut ul in u {
        bias.push(ul[dim] * scale);
        ul.truncate(dim);
        ul.iter_mut().for_each(|a| *a *= scale);
        weights.push(ul);
    }
    LinearSvmModel::from_parts(weights, bias, *config, fingerprint)
}

impl LinearSvmModel {
    pub fn from_parts(
        weights: Vec<Vec<f64>>,
        bias: Vec<f64>,
        config: SvmConfig,
        fingerprint: Fingerprint,
    ) -> Result<Self> {
        let dim = weights.first().map_or(0, Vec::len);
        if weights.is_empty() || weights.len() != bias.len() || weights.iter().any(|w| w.len() != dim) {
            return Err(Error::Model("SVM needs one weight vector and bias per label".into()));
        }
        if weights.iter().flatten().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Model("SVM parameters are not finite".into()));
        }
        Ok(LinearSvmModel {
            weights,
            bias,
            config,
            fingerprint,
        })
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    /// `w·x + b` for every label.
    pub fn decision_function(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        check_input(x, self.weights[0].len(), self.fingerprint)?;
        Ok(self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| w.iter().zip(x.values()).map(|(a, v)| a * v).sum::<f64>() + b)
            .collect())
    }

    /// Label with the largest decision value; ties go to the earlier label.
    pub fn predict(&self, x: &FeatureVector) -> Result<usize> {
        Ok(argmax(&self.decision_function(x)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::VectorKind;

    fn fv(values: &[f64]) -> FeatureVector {
        FeatureVector::new(values.to_vec(), Fingerprint::default(), VectorKind::Embedding).unwrap()
    }

    fn fit(points: &[(f64, usize)], seed: u64) -> LinearSvmModel {
        let x: Vec<_> = points.iter().map(|p| fv(&[p.0])).collect();
        let y: Vec<_> = points.iter().map(|p| p.1).collect();
        svm_fit(
            &x,
            &y,
            2,
            &SvmConfig {
                seed,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn separates_separable_data() {
        let pts = [(-2.0, 0), (-1.0, 0), (1.0, 1), (2.0, 1)];
        let m = fit(&pts, 3);
        assert_eq!(m.predict(&fv(&[-3.0])).unwrap(), 0);
        assert_eq!(m.predict(&fv(&[3.0])).unwrap(), 1);
        for (v, l) in pts {
            assert_eq!(m.predict(&fv(&[v])).unwrap(), l);
        }
        let dup = fit(&[(-2.0, 0), (-1.0, 0), (1.0, 1), (2.0, 1), (2.0, 1)], 3);
        assert_eq!(dup.predict(&fv(&[-3.0])).unwrap(), 0);
        assert_eq!(dup.predict(&fv(&[3.0])).unwrap(), 1);
    }

    #[test]
    fn deterministic_given_seed() {
        let pts = [(-2.0, 0), (-1.0, 0), (0.5, 1), (1.0, 0), (2.0, 1)];
        assert_eq!(fit(&pts, 9), fit(&pts, 9));
    }

    #[test]
    fn single_label_is_rejected() {
        let x = vec![fv(&[1.0]), fv(&[2.0])];
        assert!(svm_fit(&x, &[0, 0], 2, &SvmConfig::default()).is_err());
    }

    #[test]
    fn argmax_and_ties() {
        let fp = Fingerprint::default();
        let m = LinearSvmModel::from_parts(
            vec![vec![2.0], vec![-1.0], vec![0.5]],
            vec![0.0; 3],
            SvmConfig::default(),
            fp,
        )
        .unwrap();
        assert_eq!(m.predict(&fv(&[1.0])).unwrap(), 0);
        assert_eq!(m.predict(&fv(&[2.0])).unwrap(), 0);
        let tie =
            LinearSvmModel::from_parts(vec![vec![1.0], vec![1.0]], vec![0.0; 2], SvmConfig::default(), fp).unwrap();
        assert_eq!(tie.predict(&fv(&[1.0])).unwrap(), 0);
        assert!(m.predict(&fv(&[1.0, 1.0])).is_err());
    }
}
