//! The classification paradigm: codes are orthogonal categorical outputs of
//! a discriminative model fitted on labeled report vectors. Every label,
//! Other included, can be predicted.

mod knn;
mod mlp;
mod svm;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::features::{FeatureVector, Fingerprint};

pub use knn::{knn_fit, KnnModel};
pub use mlp::{mlp_fit, MlpConfig, MlpModel};
pub use svm::{svm_fit, LinearSvmModel, SvmConfig};

/// Validate a training set and return its dimension and feature fingerprint.
fn check_training(x: &[FeatureVector], y: &[usize], n_labels: usize) -> Result<(usize, Fingerprint)> {
    let first = x.first().ok_or_else(|| Error::Config("empty training set".into()))?;
    if x.len() != y.len() {
        return Err(Error::Config(format!("{} vectors but {} labels", x.len(), y.len())));
    }
    let (dim, fp) = (first.dim(), first.fingerprint());
    for v in x {
        if v.fingerprint() != fp {
            return Err(Error::Fingerprint {
                expected: fp.to_string(),
                actual: v.fingerprint().to_string(),
            });
        }
        if v.dim() != dim {
            return Err(Error::Dimension {
                expected: dim,
                actual: v.dim(),
            });
        }
    }
    if let Some(&l) = y.iter().find(|&&l| l >= n_labels) {
        return Err(Error::Config(format!("label index {l} outside {n_labels} labels")));
    }
    Ok((dim, fp))
}

fn check_input(x: &FeatureVector, dim: usize, fp: Fingerprint) -> Result<()> {
    if x.fingerprint() != fp {
        return Err(Error::Fingerprint {
            expected: fp.to_string(),
            actual: x.fingerprint().to_string(),
        });
    }
    if x.dim() != dim {
        return Err(Error::Dimension {
            expected: dim,
            actual: x.dim(),
        });
    }
    Ok(())
}

fn to_matrix(x: &[FeatureVector], dim: usize) -> Array2<f64> {
    let mut m = Array2::zeros((x.len(), dim));
    for (mut row, v) in m.rows_mut().into_iter().zip(x) {
        row.assign(&ndarray::ArrayView1::from(v.values()));
    }
    m
}
