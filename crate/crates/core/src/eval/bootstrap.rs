use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{macro_f1_indices, EvalMode};
use super::PredictionRecord;
use crate::corpus::LabelSet;
use crate::error::{Error, Result};
use crate::util::{derive_seed, rng};

pub const DEFAULT_REPLICATES: usize = 1000;

const REPLICATE_STREAM: u64 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub delta_observed: f64,
    pub p_value: f64,
    pub replicates: usize,
    pub seed: u64,
}

/// Fraction of replicate differences exceeding twice the observed one.
/// A zero observed difference gives 1.
pub fn p_value(deltas: &[f64], delta_observed: f64) -> f64 {
    if delta_observed == 0.0 || deltas.is_empty() {
        return 1.0;
    }
    deltas.iter().filter(|&&d| d > 2.0 * delta_observed).count() as f64 / deltas.len() as f64
}

/// Macro-F1 differences `A - B` on `replicates` resamples of the instances
/// (with replacement, same size). Replicate `i` draws from its own seed, so
/// the result does not depend on scheduling.
pub fn replicate_deltas(
    gold: &[usize],
    pred_a: &[usize],
    pred_b: &[usize],
    labels: &LabelSet,
    mode: EvalMode,
    replicates: usize,
    seed: u64,
) -> Vec<f64> {
    let n = gold.len();
    (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut r = rng(derive_seed(seed, REPLICATE_STREAM, i as u64));
            let mut g = Vec::with_capacity(n);
            let mut a = Vec::with_capacity(n);
            let mut b = Vec::with_capacity(n);
            for _ in 0..n {
                let j = r.gen_range(0..n);
                g.push(gold[j]);
                a.push(pred_a[j]);
                b.push(pred_b[j]);
            }
            macro_f1_indices(&g, &a, labels, mode) - macro_f1_indices(&g, &b, labels, mode)
        })
        .collect()
}

/// Paired bootstrap over aligned label-index vectors. System A must score at
/// least as high as system B.
pub fn paired_bootstrap(
    gold: &[usize],
    pred_a: &[usize],
    pred_b: &[usize],
    labels: &LabelSet,
    mode: EvalMode,
    replicates: usize,
    seed: u64,
) -> Result<SignificanceResult> {
    let n = gold.len();
    if n == 0 || pred_a.len() != n || pred_b.len() != n {
        return Err(Error::Config(
            "bootstrap needs equally sized, non-empty prediction sets".into(),
        ));
    }
    if replicates == 0 {
        return Err(Error::Config("bootstrap needs at least one replicate".into()));
    }
    if gold.iter().chain(pred_a).chain(pred_b).any(|&l| l >= labels.len()) {
        return Err(Error::Config("label index outside the label set".into()));
    }
    let delta = macro_f1_indices(gold, pred_a, labels, mode) - macro_f1_indices(gold, pred_b, labels, mode);
    if delta < 0.0 {
        return Err(Error::Config(format!(
            "system A scores below system B (delta {delta}); swap the pair"
        )));
    }
    let p = if delta == 0.0 {
        1.0
    } else {
        p_value(
            &replicate_deltas(gold, pred_a, pred_b, labels, mode, replicates, seed),
            delta,
        )
    };
    Ok(SignificanceResult {
        delta_observed: delta,
        p_value: p,
        replicates,
        seed,
    })
}

/// Paired bootstrap over prediction records aligned by report id.
pub fn bootstrap_test(
    preds_a: &[PredictionRecord],
    preds_b: &[PredictionRecord],
    labels: &LabelSet,
    mode: EvalMode,
    replicates: usize,
    seed: u64,
) -> Result<SignificanceResult> {
    if preds_a.len() != preds_b.len() {
        return Err(Error::Config(format!(
            "misaligned prediction sets: {} vs {} records",
            preds_a.len(),
            preds_b.len()
        )));
    }
    let by_id: HashMap<&str, &PredictionRecord> = preds_b.iter().map(|r| (r.id.as_str(), r)).collect();
    if by_id.len() != preds_b.len() {
        return Err(Error::Config("duplicate report id in prediction set".into()));
    }
    let mut gold = Vec::with_capacity(preds_a.len());
    let mut a = Vec::with_capacity(preds_a.len());
    let mut b = Vec::with_capacity(preds_a.len());
    for ra in preds_a {
        let rb = by_id
            .get(ra.id.as_str())
            .ok_or_else(|| Error::Config(format!("misaligned prediction sets: report {} missing", ra.id)))?;
        if rb.gold != ra.gold {
            return Err(Error::Config(format!("report {} has different gold labels", ra.id)));
        }
        gold.push(super::label_index(labels, &ra.gold)?);
        a.push(super::label_index(labels, &ra.pred)?);
        b.push(super::label_index(labels, &rb.pred)?);
    }
    paired_bootstrap(&gold, &a, &b, labels, mode, replicates, seed)
}
