//! Cross-validation, macro-averaged scoring in two label scopes, and the
//! paired bootstrap significance test.

mod bootstrap;
mod cv;
mod metrics;
mod system;

use serde::{Deserialize, Serialize};

use crate::corpus::LabelSet;
use crate::error::{Error, Result};

pub use bootstrap::{
    bootstrap_test, p_value, paired_bootstrap, replicate_deltas, SignificanceResult, DEFAULT_REPLICATES,
};
pub use cv::{fit_fold, run_cv, CvResult, FoldFit, FoldResult};
pub use metrics::{evaluate, EvalMode, LabelMetrics, MetricsReport};
pub use system::{
    check_compatible, fit_system, FeatureArtifact, ModelArtifact, ModelSpec, Paradigm, Resources, SystemConfig,
    TrainedModel, TrainedSystem,
};

/// One test-set decision of one system.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub gold: String,
    pub pred: String,
    pub fold: usize,
    pub system: String,
}

fn label_index(labels: &LabelSet, code: &str) -> Result<usize> {
    labels
        .index_of(code)
        .ok_or_else(|| Error::Config(format!("label {code:?} is not in the label set")))
}

/// Score prediction records in the given label scope.
pub fn macro_f1(records: &[PredictionRecord], labels: &LabelSet, mode: EvalMode) -> Result<MetricsReport> {
    let gold = records
        .iter()
        .map(|r| label_index(labels, &r.gold))
        .collect::<Result<Vec<_>>>()?;
    let pred = records
        .iter()
        .map(|r| label_index(labels, &r.pred))
        .collect::<Result<Vec<_>>>()?;
    evaluate(&gold, &pred, labels, mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_are_scored_by_code() {
        let labels = LabelSet::new(vec!["A".into(), "B".into()], None).unwrap();
        let rec = |g: &str, p: &str| PredictionRecord {
            id: format!("{g}{p}"),
            gold: g.into(),
            pred: p.into(),
            fold: 0,
            system: "s".into(),
        };
        let records = [rec("A", "A"), rec("A", "B"), rec("B", "B"), rec("B", "B")];
        let r = macro_f1(&records, &labels, EvalMode::AllLabels).unwrap();
        approx::assert_abs_diff_eq!(r.macro_f1, 11.0 / 15.0, epsilon = 1e-12);
        assert!(macro_f1(&[rec("A", "C")], &labels, EvalMode::AllLabels).is_err());
    }
}
