use serde::{Deserialize, Serialize};

use crate::corpus::LabelSet;
use crate::error::{Error, Result};

/// Which labels a score covers. `IcfOnly` drops reports whose gold label is
/// Other and averages over the defined codes only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    AllLabels,
    IcfOnly,
}

impl EvalMode {
    pub const ALL: [EvalMode; 2] = [EvalMode::AllLabels, EvalMode::IcfOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::AllLabels => "all_labels",
            EvalMode::IcfOnly => "icf_only",
        }
    }

    fn scored_labels(self, labels: &LabelSet) -> Vec<usize> {
        match self {
            EvalMode::AllLabels => (0..labels.len()).collect(),
            EvalMode::IcfOnly => labels.defined_indices(),
        }
    }

    fn keeps_gold(self, labels: &LabelSet, gold: usize) -> bool {
        self == EvalMode::AllLabels || !labels.is_other(gold)
    }
}

impl std::str::FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all_labels" => Ok(EvalMode::AllLabels),
            "icf_only" => Ok(EvalMode::IcfOnly),
            _ => Err(Error::Config(format!("unknown evaluation mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Per-label and macro-averaged scores with the confusion matrix.
///
/// The confusion matrix always spans the whole label set (rows gold, columns
/// predicted); in `IcfOnly` mode the Other row is empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mode: EvalMode,
    pub macro_f1: f64,
    pub per_label: Vec<LabelMetrics>,
    pub labels: Vec<String>,
    pub confusion: Vec<Vec<usize>>,
}

fn confusion(gold: &[usize], pred: &[usize], labels: &LabelSet, mode: EvalMode) -> Vec<Vec<usize>> {
    let n = labels.len();
    let mut m = vec![vec![0usize; n]; n];
    for (&g, &p) in gold.iter().zip(pred) {
        if mode.keeps_gold(labels, g) {
            m[g][p] += 1;
        }
    }
    m
}

/// `(precision, recall, f1)`, each 0 when undefined.
fn prf(tp: usize, predicted: usize, support: usize) -> (f64, f64, f64) {
    let p = if predicted == 0 {
        0.0
    } else {
        tp as f64 / predicted as f64
    };
    let r = if support == 0 { 0.0 } else { tp as f64 / support as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

fn column_sum(m: &[Vec<usize>], l: usize) -> usize {
    m.iter().map(|row| row[l]).sum()
}

/// Macro-F1 alone, for resampling loops.
pub(crate) fn macro_f1_indices(gold: &[usize], pred: &[usize], labels: &LabelSet, mode: EvalMode) -> f64 {
    let m = confusion(gold, pred, labels, mode);
    let scored = mode.scored_labels(labels);
    let total: f64 = scored
        .iter()
        .map(|&l| prf(m[l][l], column_sum(&m, l), m[l].iter().sum()).2)
        .sum();
    total / scored.len() as f64
}

/// Score label-index predictions against gold label indices.
pub fn evaluate(gold: &[usize], pred: &[usize], labels: &LabelSet, mode: EvalMode) -> Result<MetricsReport> {
    if gold.len() != pred.len() {
        return Err(Error::Config(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::Config("no predictions to score".into()));
    }
    if let Some(&l) = gold.iter().chain(pred).find(|&&l| l >= labels.len()) {
        return Err(Error::Config(format!("label index {l} outside the label set")));
    }
    let m = confusion(gold, pred, labels, mode);
    let per_label: Vec<LabelMetrics> = mode
        .scored_labels(labels)
        .into_iter()
        .map(|l| {
            let support = m[l].iter().sum();
            let (precision, recall, f1) = prf(m[l][l], column_sum(&m, l), support);
            LabelMetrics {
                label: labels.code(l).to_string(),
                precision,
                recall,
                f1,
                support,
            }
        })
        .collect();
    let macro_f1 = per_label.iter().map(|x| x.f1).sum::<f64>() / per_label.len() as f64;
    Ok(MetricsReport {
        mode,
        macro_f1,
        per_label,
        labels: labels.codes().to_vec(),
        confusion: m,
    })
}
