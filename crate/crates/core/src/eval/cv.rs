use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, macro_f1_indices, EvalMode, MetricsReport};
use super::system::{fit_system, Paradigm, Resources, SystemConfig, TrainedSystem};
use super::PredictionRecord;
use crate::corpus::{Dataset, FoldPlan};
use crate::error::{Error, Result};
use crate::util::derive_seed;

const FOLD_STREAM: u64 = 10;
const GRID_STREAM: u64 = 11;

/// Test-split scores of one fold and the grid entry chosen for it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub selected: usize,
    pub dev_macro_f1: Option<f64>,
    pub all_labels: MetricsReport,
    pub icf_only: MetricsReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub system: String,
    pub paradigm: Paradigm,
    /// Test predictions of every fold, fold by fold.
    pub predictions: Vec<PredictionRecord>,
    pub folds: Vec<FoldResult>,
}

impl CvResult {
    /// Gold and predicted label indices of all test predictions.
    pub fn indices(&self, dataset: &Dataset) -> Result<(Vec<usize>, Vec<usize>)> {
        let labels = dataset.label_set();
        let mut gold = Vec::with_capacity(self.predictions.len());
        let mut pred = Vec::with_capacity(self.predictions.len());
        for p in &self.predictions {
            gold.push(super::label_index(labels, &p.gold)?);
            pred.push(super::label_index(labels, &p.pred)?);
        }
        Ok((gold, pred))
    }

    /// Scores over the pooled test predictions of all folds.
    pub fn metrics(&self, dataset: &Dataset, mode: EvalMode) -> Result<MetricsReport> {
        super::macro_f1(&self.predictions, dataset.label_set(), mode)
    }
}

fn dev_mode(paradigm: Paradigm) -> EvalMode {
    match paradigm {
        Paradigm::Classification => EvalMode::AllLabels,
        Paradigm::CandidateSelection => EvalMode::IcfOnly,
    }
}

fn predict_indices(system: &TrainedSystem, dataset: &Dataset, indices: &[usize]) -> Result<Vec<usize>> {
    indices.iter().map(|&i| system.predict(&dataset.reports()[i])).collect()
}

/// The model chosen for one fold: the grid entry with the best development
/// macro-F1, fitted on the fold's training split.
#[derive(Clone, Debug)]
pub struct FoldFit {
    pub system: TrainedSystem,
    pub selected: usize,
    pub dev_macro_f1: Option<f64>,
}

/// Fit every grid entry on fold `f`'s training split and keep the one with
/// the best development macro-F1 (earliest on ties).
///
/// Classification grids are compared on all labels and candidate-selection
/// grids on the defined codes only. A single-entry grid skips the
/// development pass.
pub fn fit_fold(
    dataset: &Dataset,
    plan: &FoldPlan,
    f: usize,
    system: &SystemConfig,
    resources: &Resources,
    seed: u64,
) -> Result<FoldFit> {
    let paradigm = system.validate(dataset, resources)?;
    let fold = plan.folds.get(f).ok_or_else(|| {
        Error::Config(format!(
            "fold {f} does not exist; the plan has {} folds",
            plan.folds.len()
        ))
    })?;
    let fold_seed = derive_seed(seed, FOLD_STREAM, f as u64);
    let fit = |g: usize| {
        fit_system(
            system,
            &system.grid[g],
            dataset,
            &fold.train,
            resources,
            derive_seed(fold_seed, GRID_STREAM, g as u64),
        )
    };
    if system.grid.len() == 1 || fold.dev.is_empty() {
        return Ok(FoldFit {
            system: fit(0)?,
            selected: 0,
            dev_macro_f1: None,
        });
    }
    let gold_all = dataset.gold_indices();
    let dev_gold: Vec<usize> = fold.dev.iter().map(|&i| gold_all[i]).collect();
    let mut best: Option<FoldFit> = None;
    for g in 0..system.grid.len() {
        let trained = fit(g)?;
        let pred = predict_indices(&trained, dataset, &fold.dev)?;
        let score = macro_f1_indices(&dev_gold, &pred, dataset.label_set(), dev_mode(paradigm));
        if best.as_ref().is_none_or(|b| Some(score) > b.dev_macro_f1) {
            best = Some(FoldFit {
                system: trained,
                selected: g,
                dev_macro_f1: Some(score),
            });
        }
    }
    Ok(best.expect("grid is not empty"))
}

/// Run [`fit_fold`] on every fold and label each test split.
///
/// Folds run in parallel; every random choice is seeded from
/// `(seed, fold, grid entry)`, so the result does not depend on scheduling.
pub fn run_cv(
    dataset: &Dataset,
    plan: &FoldPlan,
    system: &SystemConfig,
    resources: &Resources,
    seed: u64,
) -> Result<CvResult> {
    let paradigm = system.validate(dataset, resources)?;
    let labels = dataset.label_set();
    let gold_all = dataset.gold_indices();
    let per_fold: Vec<(FoldResult, Vec<PredictionRecord>)> = (0..plan.folds.len())
        .into_par_iter()
        .map(|f| {
            let fold = &plan.folds[f];
            let fitted = fit_fold(dataset, plan, f, system, resources, seed)?;
            let pred = predict_indices(&fitted.system, dataset, &fold.test)?;
            let gold: Vec<usize> = fold.test.iter().map(|&i| gold_all[i]).collect();
            let result = FoldResult {
                fold: f,
                selected: fitted.selected,
                dev_macro_f1: fitted.dev_macro_f1,
                all_labels: evaluate(&gold, &pred, labels, EvalMode::AllLabels)?,
                icf_only: evaluate(&gold, &pred, labels, EvalMode::IcfOnly)?,
            };
            let records = fold
                .test
                .iter()
                .zip(&pred)
                .map(|(&i, &p)| PredictionRecord {
                    id: dataset.reports()[i].id().to_string(),
                    gold: labels.code(gold_all[i]).to_string(),
                    pred: labels.code(p).to_string(),
                    fold: f,
                    system: system.id.clone(),
                })
                .collect();
            Ok((result, records))
        })
        .collect::<Result<_>>()?;
    let mut folds = Vec::with_capacity(per_fold.len());
    let mut predictions = Vec::with_capacity(dataset.len());
    for (result, records) in per_fold {
        folds.push(result);
        predictions.extend(records);
    }
    Ok(CvResult {
        system: system.id.clone(),
        paradigm,
        predictions,
        folds,
    })
}
