use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::util::rng;

/// Report positions (indices into the dataset) for one cross-validation fold.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub dev: Vec<usize>,
    pub test: Vec<usize>,
}

/// A k-fold plan: fold `i` tests on block `i`, tunes on block `i + 1 (mod k)`
/// and trains on the remaining `k - 2` blocks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    /// Report ids of each fold's (train, dev, test) split.
    pub fn ids(&self, dataset: &Dataset) -> Vec<(Vec<String>, Vec<String>, Vec<String>)> {
        let ids = |xs: &[usize]| -> Vec<String> { xs.iter().map(|&i| dataset.reports()[i].id().to_string()).collect() };
        self.folds
            .iter()
            .map(|f| (ids(&f.train), ids(&f.dev), ids(&f.test)))
            .collect()
    }
}

/// Shuffle the dataset with `seed` and cut it into `k` near-equal blocks.
///
/// Deterministic in (dataset order, k, seed). `k` must be at least 3 so that
/// every fold keeps a non-empty training portion.
pub fn split_folds(dataset: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    let n = dataset.len();
    if k < 3 {
        return Err(Error::Config(format!(
            "fold count must be at least 3 (test, dev and train blocks), got {k}"
        )));
    }
    if k > n {
        return Err(Error::Config(format!(
            "fold count {k} is larger than the dataset ({n} reports)"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng(seed));

    let (base, extra) = (n / k, n % k);
    let mut blocks = Vec::with_capacity(k);
    let mut start = 0;
    for b in 0..k {
        let len = base + usize::from(b < extra);
        let mut block = order[start..start + len].to_vec();
        block.sort_unstable();
        blocks.push(block);
        start += len;
    }

    let folds = (0..k)
        .map(|i| {
            let dev_block = (i + 1) % k;
            let mut train: Vec<usize> = blocks
                .iter()
                .enumerate()
                .filter(|(b, _)| *b != i && *b != dev_block)
                .flat_map(|(_, blk)| blk.iter().copied())
                .collect();
            train.sort_unstable();
            Fold {
                train,
                dev: blocks[dev_block].clone(),
                test: blocks[i].clone(),
            }
        })
        .collect();
    Ok(FoldPlan { k, seed, folds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ActivityReport, LabelSet};
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn dataset(n: usize) -> Dataset {
        let ls = LabelSet::new(vec!["a".into()], None).unwrap();
        let reports = (0..n)
            .map(|i| ActivityReport::new(format!("r{i}"), vec!["w".into()], None, "a", None).unwrap())
            .collect();
        Dataset::new(reports, ls).unwrap()
    }

    #[test]
    fn twenty_reports_ten_folds() {
        let ds = dataset(20);
        let plan = split_folds(&ds, 10, 42).unwrap();
        for f in &plan.folds {
            assert_eq!((f.train.len(), f.dev.len(), f.test.len()), (16, 2, 2));
        }
        assert_eq!(plan, split_folds(&ds, 10, 42).unwrap());
        let all: HashSet<usize> = plan.folds.iter().flat_map(|f| f.test.iter().copied()).collect();
        assert_eq!(all.len(), 20);
    }

    #[test]
    fn rejects_oversized_k() {
        assert!(split_folds(&dataset(5), 6, 0).is_err());
        assert!(split_folds(&dataset(5), 2, 0).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_dataset(n in 3usize..200, k in 3usize..12, seed in any::<u64>()) {
            prop_assume!(k <= n);
            let plan = split_folds(&dataset(n), k, seed).unwrap();
            let mut seen = vec![0usize; n];
            for f in &plan.folds {
                for &t in &f.test { seen[t] += 1; }
                let tr: HashSet<_> = f.train.iter().collect();
                let dv: HashSet<_> = f.dev.iter().collect();
                let te: HashSet<_> = f.test.iter().collect();
                prop_assert!(tr.is_disjoint(&dv) && tr.is_disjoint(&te) && dv.is_disjoint(&te));
                prop_assert_eq!(tr.len() + dv.len() + te.len(), n);
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
        }
    }
}
