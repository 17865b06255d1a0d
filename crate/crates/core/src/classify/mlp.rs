use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{check_input, check_training, to_matrix};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, Fingerprint};
use crate::nn::{glorot, relu_backward, relu_inplace, slice, slice_mut, softmax_rows, Adam, AdamConfig};
use crate::select::argmax;
use crate::util::{derive_seed, rng};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: usize,
    pub max_epochs: usize,
    pub adam: AdamConfig,
    /// L2 penalty `alpha`, applied as `alpha / (2·batch) · ‖W‖²`.
    pub l2: f64,
    /// Mini-batch size; `None` means `min(200, n)`.
    pub batch_size: Option<usize>,
    pub tol: f64,
    pub patience: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: 100,
            max_epochs: 1000,
            adam: AdamConfig::default(),
            l2: 1e-4,
            batch_size: None,
            tol: 1e-4,
            patience: 10,
            seed: 0,
        }
    }
}

/// Feed-forward network with one rectified-linear hidden layer and a softmax
/// output over all labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    w1: Array2<f64>,
    b1: Array1<f64>,
    w2: Array2<f64>,
    b2: Array1<f64>,
    l2: f64,
    fingerprint: Fingerprint,
}

struct Grads {
    w1: Array2<f64>,
    b1: Array1<f64>,
    w2: Array2<f64>,
    b2: Array1<f64>,
}

impl MlpModel {
    /// Glorot-uniform initialization, as used before training.
    pub fn init(input: usize, n_labels: usize, config: &MlpConfig, fingerprint: Fingerprint) -> Self {
        let mut r = rng(config.seed);
        let (w1, b1) = glorot(input, config.hidden, &mut r);
        let (w2, b2) = glorot(config.hidden, n_labels, &mut r);
        MlpModel {
            w1,
            b1,
            w2,
            b2,
            l2: config.l2,
            fingerprint,
        }
    }

    pub fn n_labels(&self) -> usize {
        self.w2.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w1.nrows()
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    fn hidden_layer(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut h = x.dot(&self.w1.t()) + &self.b1;
        relu_inplace(&mut h);
        h
    }

    fn probabilities(&self, h: &Array2<f64>) -> Array2<f64> {
        let mut p = h.dot(&self.w2.t()) + &self.b2;
        softmax_rows(&mut p);
        p
    }

    fn penalty(&self, batch: usize) -> f64 {
        let sq = self.w1.iter().chain(self.w2.iter()).map(|w| w * w).sum::<f64>();
        self.l2 / (2.0 * batch as f64) * sq
    }

    fn loss_grads(&self, x: &Array2<f64>, y: &[usize], want_grad: bool) -> (f64, Option<Grads>) {
        let b = x.nrows();
        let h = self.hidden_layer(x);
        let mut p = self.probabilities(&h);
        let ce = y
            .iter()
            .enumerate()
            .map(|(n, &l)| -p[[n, l]].max(f64::MIN_POSITIVE).ln())
            .sum::<f64>()
            / b as f64;
        let loss = ce + self.penalty(b);
        if !want_grad {
            return (loss, None);
        }
        for (n, &l) in y.iter().enumerate() {
            p[[n, l]] -= 1.0;
        }
        p /= b as f64;
        let reg = self.l2 / b as f64;
        let w2 = p.t().dot(&h) + &(&self.w2 * reg);
        let b2 = p.sum_axis(Axis(0));
        let mut dh = p.dot(&self.w2);
        relu_backward(&mut dh, &h);
        let w1 = dh.t().dot(x) + &(&self.w1 * reg);
        let b1 = dh.sum_axis(Axis(0));
        (loss, Some(Grads { w1, b1, w2, b2 }))
    }

    fn rows(x: &[&[f64]]) -> Result<Array2<f64>> {
        let dim = x.first().map_or(0, |v| v.len());
        let mut m = Array2::zeros((x.len(), dim));
        for (mut row, v) in m.rows_mut().into_iter().zip(x) {
            if v.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    actual: v.len(),
                });
            }
            row.assign(&ArrayView1::from(*v));
        }
        Ok(m)
    }

    fn check_batch(&self, x: &[&[f64]], y: &[usize]) -> Result<Array2<f64>> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::Config("batch needs one label per row".into()));
        }
        if let Some(&l) = y.iter().find(|&&l| l >= self.n_labels()) {
            return Err(Error::Config(format!("label index {l} outside the output layer")));
        }
        let m = Self::rows(x)?;
        if m.ncols() != self.w1.ncols() {
            return Err(Error::Dimension {
                expected: self.w1.ncols(),
                actual: m.ncols(),
            });
        }
        Ok(m)
    }

    /// Mean cross-entropy plus the L2 penalty, and its gradient with respect
    /// to [`parameters`](Self::parameters).
    pub fn loss_and_gradient(&self, x: &[&[f64]], y: &[usize]) -> Result<(f64, Vec<f64>)> {
        let m = self.check_batch(x, y)?;
        let (loss, g) = self.loss_grads(&m, y, true);
        let g = g.expect("gradient requested");
        let flat = g.w1.iter().chain(&g.b1).chain(&g.w2).chain(&g.b2).copied().collect();
        Ok((loss, flat))
    }

    pub fn loss(&self, x: &[&[f64]], y: &[usize]) -> Result<f64> {
        let m = self.check_batch(x, y)?;
        Ok(self.loss_grads(&m, y, false).0)
    }

    /// `w1, b1, w2, b2`, each flattened row-major.
    pub fn parameters(&self) -> Vec<f64> {
        self.w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(&self.b2)
            .copied()
            .collect()
    }

    pub fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        let total = self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len();
        if values.len() != total {
            return Err(Error::Dimension {
                expected: total,
                actual: values.len(),
            });
        }
        for (p, v) in self
            .w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
            .zip(values)
        {
            *p = *v;
        }
        Ok(())
    }

    /// Softmax probabilities over all labels.
    pub fn predict_proba(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        check_input(x, self.w1.ncols(), self.fingerprint)?;
        let m = Self::rows(&[x.values()])?;
        Ok(self.probabilities(&self.hidden_layer(&m)).row(0).to_vec())
    }

    /// Most probable label; ties go to the earlier label.
    pub fn predict(&self, x: &FeatureVector) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }
}

/// Minimize softmax cross-entropy with Adam on seeded mini-batches. Training
/// stops after `max_epochs`, or once the epoch loss has failed to improve on
/// the best loss so far by `tol` for `patience` consecutive epochs.
pub fn mlp_fit(x: &[FeatureVector], y: &[usize], n_labels: usize, config: &MlpConfig) -> Result<MlpModel> {
    let (dim, fingerprint) = check_training(x, y, n_labels)?;
    if config.hidden == 0 || config.batch_size == Some(0) {
        return Err(Error::Config("hidden width and batch size must be positive".into()));
    }
    let data = to_matrix(x, dim);
    let mut model = MlpModel::init(dim, n_labels, config, fingerprint);
    let batch = config.batch_size.unwrap_or(200).min(x.len());
    let sizes = [model.w1.len(), model.b1.len(), model.w2.len(), model.b2.len()];
    let mut adam = Adam::new(config.adam, &sizes);
    let mut r = rng(derive_seed(config.seed, 1, 0));
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut best = f64::INFINITY;
    let mut stale = 0;
    for _ in 0..config.max_epochs {
        order.shuffle(&mut r);
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            let xb = data.select(Axis(0), chunk);
            let yb: Vec<usize> = chunk.iter().map(|&i| y[i]).collect();
            let (loss, g) = model.loss_grads(&xb, &yb, true);
            let g = g.expect("gradient requested");
            total += loss * chunk.len() as f64;
            adam.step(
                vec![
                    slice_mut(&mut model.w1),
                    slice_mut(&mut model.b1),
                    slice_mut(&mut model.w2),
                    slice_mut(&mut model.b2),
                ],
                vec![slice(&g.w1), slice(&g.b1), slice(&g.w2), slice(&g.b2)],
            );
        }
        let epoch_loss = total / x.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::Model("MLP training diverged".into()));
        }
        if epoch_loss > best - config.tol {
            stale += 1;
        } else {
            stale = 0;
        }
        best = best.min(epoch_loss);
        if stale >= config.patience {
            break;
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::VectorKind;
    use rand::Rng;

    fn fv(values: Vec<f64>) -> FeatureVector {
        FeatureVector::new(values, Fingerprint::default(), VectorKind::Embedding).unwrap()
    }

    fn blobs(n: usize, seed: u64) -> (Vec<FeatureVector>, Vec<usize>) {
        let mut r = rng(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let l = i % 2;
            let c = if l == 0 { -2.0 } else { 2.0 };
            x.push(fv(vec![c + r.gen_range(-1.0..1.0), c + r.gen_range(-1.0..1.0)]));
            y.push(l);
        }
        (x, y)
    }

    #[test]
    fn fits_separable_blobs() {
        let (x, y) = blobs(100, 1);
        let m = mlp_fit(
            &x,
            &y,
            2,
            &MlpConfig {
                seed: 4,
                ..Default::default()
            },
        )
        .unwrap();
        let correct = x.iter().zip(&y).filter(|(v, &l)| m.predict(v).unwrap() == l).count();
        assert!(correct >= 99, "{correct}");
    }

    #[test]
    fn one_epoch_reduces_loss() {
        let (x, y) = blobs(40, 2);
        let config = MlpConfig {
            max_epochs: 1,
            ..Default::default()
        };
        let rows: Vec<&[f64]> = x.iter().map(|v| v.values()).collect();
        let before = MlpModel::init(2, 2, &config, Fingerprint::default())
            .loss(&rows, &y)
            .unwrap();
        let after = mlp_fit(&x, &y, 2, &config).unwrap().loss(&rows, &y).unwrap();
        assert!(after < before);
    }

    #[test]
    fn probabilities_and_zero_model() {
        let (x, y) = blobs(10, 3);
        let mut m = mlp_fit(
            &x,
            &y,
            3,
            &MlpConfig {
                max_epochs: 5,
                ..Default::default()
            },
        )
        .unwrap();
        let p = m.predict_proba(&x[0]).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        let n = m.parameters().len();
        m.set_parameters(&vec![0.0; n]).unwrap();
        for q in m.predict_proba(&x[0]).unwrap() {
            assert!((q - 1.0 / 3.0).abs() <= 1e-15);
        }
        assert_eq!(m.predict(&x[0]).unwrap(), 0);
    }

    #[test]
    fn deterministic_given_seed() {
        let (x, y) = blobs(30, 5);
        let c = MlpConfig {
            max_epochs: 20,
            seed: 8,
            ..Default::default()
        };
        assert_eq!(mlp_fit(&x, &y, 2, &c).unwrap(), mlp_fit(&x, &y, 2, &c).unwrap());
    }
}
