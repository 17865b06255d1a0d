use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::classify::{knn_fit, mlp_fit, svm_fit, KnnModel, LinearSvmModel, MlpConfig, MlpModel, SvmConfig};
use crate::corpus::{ActivityReport, CodeDefinitions, Dataset, LabelSet};
use crate::error::{Error, Result};
use crate::features::{
    EmbeddingMode, EmbeddingTable, FeatureConfig, FeatureSpace, FeatureVector, Fingerprint, UnigramMode, Vocabulary,
};
use crate::nn::AdamConfig;
use crate::select::{
    cosine_scores, lesk_preprocess, lesk_select, CodeEmbeddingSet, LeskProfile, ProjectionConfig, ProjectionInit,
    ProjectionModel, ScoreMode,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Paradigm {
    Classification,
    CandidateSelection,
}

fn default_k() -> usize {
    5
}
fn default_c() -> f64 {
    1.0
}
fn default_svm_epochs() -> usize {
    1000
}
fn default_hidden() -> usize {
    100
}
fn default_mlp_epochs() -> usize {
    1000
}
fn default_l2() -> f64 {
    1e-4
}
fn default_learning_rate() -> f64 {
    1e-3
}
fn default_hidden_layers() -> usize {
    1
}
fn default_projection_epochs() -> usize {
    50
}
fn default_batch() -> usize {
    32
}

/// One hyperparameter setting of one model. Omitted fields take the
/// documented defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Knn {
        #[serde(default = "default_k")]
        k: usize,
    },
    Svm {
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default = "default_svm_epochs")]
        epochs: usize,
    },
    Mlp {
        #[serde(default = "default_hidden")]
        hidden: usize,
        #[serde(default = "default_mlp_epochs")]
        max_epochs: usize,
        #[serde(default = "default_l2")]
        l2: f64,
        #[serde(default = "default_learning_rate")]
        learning_rate: f64,
    },
    Lesk {
        #[serde(default)]
        extended: bool,
    },
    Cosine {
        #[serde(default)]
        extended: bool,
    },
    Projection {
        #[serde(default)]
        extended: bool,
        #[serde(default = "default_hidden_layers")]
        hidden_layers: usize,
        #[serde(default = "default_projection_epochs")]
        epochs: usize,
        #[serde(default = "default_batch")]
        batch_size: usize,
        #[serde(default = "default_learning_rate")]
        learning_rate: f64,
        #[serde(default)]
        score: ScoreMode,
        #[serde(default)]
        init: ProjectionInit,
    },
}

impl ModelSpec {
    pub fn paradigm(&self) -> Paradigm {
        match self {
            ModelSpec::Knn { .. } | ModelSpec::Svm { .. } | ModelSpec::Mlp { .. } => Paradigm::Classification,
            _ => Paradigm::CandidateSelection,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Knn { .. } => "knn",
            ModelSpec::Svm { .. } => "svm",
            ModelSpec::Mlp { .. } => "mlp",
            ModelSpec::Lesk { .. } => "lesk",
            ModelSpec::Cosine { .. } => "cosine",
            ModelSpec::Projection { .. } => "projection",
        }
    }
}

/// Inputs shared by every system: code definitions and static embeddings.
#[derive(Clone, Debug, Default)]
pub struct Resources {
    pub definitions: Option<Arc<CodeDefinitions>>,
    pub embeddings: Option<Arc<EmbeddingTable>>,
}

impl Resources {
    fn definitions(&self) -> Result<&CodeDefinitions> {
        self.definitions
            .as_deref()
            .ok_or_else(|| Error::Config("candidate selection needs code definitions".into()))
    }
}

/// A named system: one paradigm, one feature configuration and a grid of
/// model settings searched on the development split of each fold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub id: String,
    #[serde(default)]
    pub features: Option<FeatureConfig>,
    pub grid: Vec<ModelSpec>,
}

impl SystemConfig {
    /// Check the configuration against the data and resources it will use.
    pub fn validate(&self, dataset: &Dataset, resources: &Resources) -> Result<Paradigm> {
        let err = |m: String| Err(Error::Config(format!("system {:?}: {m}", self.id)));
        if self.id.is_empty() {
            return Err(Error::Config("system id must not be empty".into()));
        }
        let Some(first) = self.grid.first() else {
            return err("empty hyperparameter grid".into());
        };
        let paradigm = first.paradigm();
        if self.grid.iter().any(|s| s.paradigm() != paradigm) {
            return err("grid mixes classification and candidate-selection models".into());
        }
        if let Some(f) = &self.features {
            f.validate()?;
            if f.action_oracle && !dataset.has_action_spans() {
                return err("the action oracle needs action spans on every report".into());
            }
            if f.embedding == EmbeddingMode::Static && resources.embeddings.is_none() {
                return err("static embeddings requested but no embedding table is configured".into());
            }
            if f.embedding == EmbeddingMode::ContextualPrecomputed && !dataset.has_contextual_vectors() {
                return err("contextual embeddings requested but reports carry no vectors".into());
            }
        }
        for spec in &self.grid {
            match spec {
                ModelSpec::Knn { k } if *k == 0 => return err("k must be at least 1".into()),
                ModelSpec::Svm { c, .. } if !(c.is_finite() && *c > 0.0) => return err("SVM C must be positive".into()),
                ModelSpec::Mlp { hidden, .. } if *hidden == 0 => return err("MLP needs hidden units".into()),
                ModelSpec::Projection { hidden_layers, .. } if !(1..=10).contains(hidden_layers) => {
                    return err("projection hidden layers must be in 1..=10".into())
                }
                _ => {}
            }
        }
        match (paradigm, first, &self.features) {
            (Paradigm::Classification, _, None) => return err("classification needs a feature config".into()),
            (Paradigm::CandidateSelection, ModelSpec::Lesk { .. }, _) => {
                if self.grid.iter().any(|s| !matches!(s, ModelSpec::Lesk { .. })) {
                    return err("Lesk cannot share a grid with embedding selectors".into());
                }
                if self.features.is_some() {
                    return err("Lesk works on report words and takes no feature config".into());
                }
            }
            (Paradigm::CandidateSelection, _, features) => {
                let ok = matches!(
                    features,
                    Some(FeatureConfig {
                        unigram: UnigramMode::None,
                        embedding: EmbeddingMode::Static,
                        ..
                    })
                );
                if !ok || self.grid.iter().any(|s| matches!(s, ModelSpec::Lesk { .. })) {
                    return err("embedding selectors need static embeddings and no unigram features".into());
                }
            }
            _ => {}
        }
        if paradigm == Paradigm::CandidateSelection {
            let defs = resources.definitions()?;
            if defs.label_indices() != dataset.label_set().defined_indices().as_slice() {
                return err("definitions do not cover exactly the defined codes of the label set".into());
            }
        }
        Ok(paradigm)
    }
}

/// The fitted model behind a [`TrainedSystem`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedModel {
    Knn {
        model: KnnModel,
    },
    Svm {
        model: LinearSvmModel,
    },
    Mlp {
        model: MlpModel,
    },
    Lesk {
        profile: LeskProfile,
        fallback: usize,
    },
    Cosine {
        codes: CodeEmbeddingSet,
    },
    Projection {
        codes: CodeEmbeddingSet,
        model: ProjectionModel,
    },
}

/// A system fitted on one training split, ready to label reports.
#[derive(Clone, Debug)]
pub struct TrainedSystem {
    id: String,
    spec: ModelSpec,
    labels: LabelSet,
    features: Option<FeatureSpace>,
    model: TrainedModel,
}

/// The most frequent defined code among `train`; ties go to the earlier label.
fn most_frequent_code(dataset: &Dataset, train: &[usize]) -> usize {
    let labels = dataset.label_set();
    let mut counts = vec![0usize; labels.len()];
    for &i in train {
        if let Some(l) = labels.index_of(dataset.reports()[i].gold_label()) {
            counts[l] += 1;
        }
    }
    let defined = labels.defined_indices();
    let mut best = defined[0];
    for &l in &defined {
        if counts[l] > counts[best] {
            best = l;
        }
    }
    best
}

/// Fit one grid entry of `system` on the reports at `train`.
///
/// Candidate selection never sees Other-labeled reports. `seed` drives every
/// stochastic step of the fit.
pub fn fit_system(
    system: &SystemConfig,
    spec: &ModelSpec,
    dataset: &Dataset,
    train: &[usize],
    resources: &Resources,
    seed: u64,
) -> Result<TrainedSystem> {
    let labels = dataset.label_set();
    let train: Vec<usize> = match spec.paradigm() {
        Paradigm::Classification => train.to_vec(),
        Paradigm::CandidateSelection => train
            .iter()
            .copied()
            .filter(|&i| {
                labels
                    .index_of(dataset.reports()[i].gold_label())
                    .is_some_and(|l| !labels.is_other(l))
            })
            .collect(),
    };
    if train.is_empty() {
        return Err(Error::Config(format!("system {:?}: empty training split", system.id)));
    }
    let reports: Vec<&ActivityReport> = train.iter().map(|&i| &dataset.reports()[i]).collect();
    let gold: Vec<usize> = reports
        .iter()
        .map(|r| labels.index_of(r.gold_label()).expect("dataset labels are validated"))
        .collect();
    let features = match &system.features {
        Some(config) => Some(FeatureSpace::fit(*config, &reports, resources.embeddings.clone())?),
        None => None,
    };
    let transform =
        |f: &FeatureSpace| -> Result<Vec<FeatureVector>> { reports.iter().map(|r| f.transform(r)).collect() };
    let model = match spec {
        ModelSpec::Knn { k } => {
            let x = transform(features.as_ref().expect("validated"))?;
            TrainedModel::Knn {
                model: knn_fit(&x, &gold, labels.len(), *k)?,
            }
        }
        ModelSpec::Svm { c, epochs } => {
            let x = transform(features.as_ref().expect("validated"))?;
            let config = SvmConfig {
                c: *c,
                epochs: *epochs,
                seed,
            };
            TrainedModel::Svm {
                model: svm_fit(&x, &gold, labels.len(), &config)?,
            }
        }
        ModelSpec::Mlp {
            hidden,
            max_epochs,
            l2,
            learning_rate,
        } => {
            let x = transform(features.as_ref().expect("validated"))?;
            let config = MlpConfig {
                hidden: *hidden,
                max_epochs: *max_epochs,
                l2: *l2,
                adam: AdamConfig {
                    learning_rate: *learning_rate,
                    ..AdamConfig::default()
                },
                seed,
                ..MlpConfig::default()
            };
            TrainedModel::Mlp {
                model: mlp_fit(&x, &gold, labels.len(), &config)?,
            }
        }
        ModelSpec::Lesk { extended } => TrainedModel::Lesk {
            profile: LeskProfile::build(resources.definitions()?, *extended)?,
            fallback: most_frequent_code(dataset, &train),
        },
        ModelSpec::Cosine { extended } => {
            let f = features.as_ref().expect("validated");
            let table = f.table().expect("static embeddings");
            TrainedModel::Cosine {
                codes: CodeEmbeddingSet::build(resources.definitions()?, table, *extended, f.config().action_oracle)?,
            }
        }
        ModelSpec::Projection {
            extended,
            hidden_layers,
            epochs,
            batch_size,
            learning_rate,
            score,
            init,
        } => {
            let f = features.as_ref().expect("validated");
            let table = f.table().expect("static embeddings");
            let codes = CodeEmbeddingSet::build(resources.definitions()?, table, *extended, f.config().action_oracle)?;
            let acts: Vec<FeatureVector> = reports.iter().map(|r| f.embed(r)).collect::<Result<_>>()?;
            let pairs: Vec<(&[f64], usize)> = acts.iter().map(|a| a.values()).zip(gold.iter().copied()).collect();
            let config = ProjectionConfig {
                hidden_layers: *hidden_layers,
                epochs: *epochs,
                batch_size: *batch_size,
                adam: AdamConfig {
                    learning_rate: *learning_rate,
                    ..AdamConfig::default()
                },
                score: *score,
                init: *init,
                seed,
            };
            let model = ProjectionModel::fit(&pairs, &codes, &config)?;
            TrainedModel::Projection { codes, model }
        }
    };
    Ok(TrainedSystem {
        id: system.id.clone(),
        spec: spec.clone(),
        labels: labels.clone(),
        features,
        model,
    })
}

impl TrainedSystem {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn label_set(&self) -> &LabelSet {
        &self.labels
    }

    pub fn features(&self) -> Option<&FeatureSpace> {
        self.features.as_ref()
    }

    pub fn model(&self) -> &TrainedModel {
        &self.model
    }

    pub fn paradigm(&self) -> Paradigm {
        self.spec.paradigm()
    }

    fn space(&self) -> &FeatureSpace {
        self.features.as_ref().expect("feature-based model has a feature space")
    }

    /// Predicted label index for one report.
    pub fn predict(&self, report: &ActivityReport) -> Result<usize> {
        match &self.model {
            TrainedModel::Knn { model } => model.predict(&self.space().transform(report)?),
            TrainedModel::Svm { model } => model.predict(&self.space().transform(report)?),
            TrainedModel::Mlp { model } => model.predict(&self.space().transform(report)?),
            TrainedModel::Lesk { profile, fallback } => Ok(lesk_select(report, profile, *fallback)),
            TrainedModel::Cosine { codes } => crate::select::cosine_select(self.space().embed(report)?.values(), codes),
            TrainedModel::Projection { codes, model } => model.select(self.space().embed(report)?.values(), codes),
        }
    }

    /// Label indices of the candidate codes, in the order of [`Self::scores`].
    pub fn candidate_labels(&self) -> Result<&[usize]> {
        match &self.model {
            TrainedModel::Lesk { profile, .. } => Ok(profile.label_indices()),
            TrainedModel::Cosine { codes } | TrainedModel::Projection { codes, .. } => Ok(codes.label_indices()),
            _ => Err(Error::Model(format!(
                "scores unavailable: {} is a classification model",
                self.spec.name()
            ))),
        }
    }

    /// Similarity of the report to every candidate code. Only candidate
    /// selection systems have scores.
    pub fn scores(&self, report: &ActivityReport) -> Result<Vec<f64>> {
        self.candidate_labels()?;
        match &self.model {
            TrainedModel::Lesk { profile, .. } => Ok(profile.scores(&lesk_preprocess(&report.text()))),
            TrainedModel::Cosine { codes } => cosine_scores(self.space().embed(report)?.values(), codes),
            TrainedModel::Projection { codes, model } => {
                model.forward_scores(self.space().embed(report)?.values(), codes)
            }
            _ => unreachable!("checked above"),
        }
    }

    pub fn to_artifact(&self) -> ModelArtifact {
        ModelArtifact {
            format: ModelArtifact::FORMAT,
            id: self.id.clone(),
            spec: self.spec.clone(),
            labels: self.labels.clone(),
            features: self.features.as_ref().map(|f| FeatureArtifact {
                config: *f.config(),
                fingerprint: f.fingerprint(),
                vocabulary: f.vocabulary().cloned(),
                embedding_digest: f.table().map(EmbeddingTable::digest),
                contextual_dim: f.contextual_dim(),
            }),
            model: self.model.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureArtifact {
    pub config: FeatureConfig,
    pub fingerprint: Fingerprint,
    pub vocabulary: Option<Vocabulary>,
    pub embedding_digest: Option<Fingerprint>,
    pub contextual_dim: Option<usize>,
}

/// Serialized form of a [`TrainedSystem`]. The embedding table is not
/// stored; its digest is, and loading checks the supplied table against it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelArtifact {
    pub format: u32,
    pub id: String,
    pub spec: ModelSpec,
    pub labels: LabelSet,
    pub features: Option<FeatureArtifact>,
    pub model: TrainedModel,
}

impl ModelArtifact {
    pub const FORMAT: u32 = 1;

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Model(format!("cannot serialize model: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let artifact: ModelArtifact =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed model artifact: {e}")))?;
        if artifact.format != Self::FORMAT {
            return Err(Error::Config(format!("unsupported model format {}", artifact.format)));
        }
        Ok(artifact)
    }

    /// Rebuild the system, checking that `embeddings` is the table the model
    /// was trained with.
    pub fn into_system(self, embeddings: Option<Arc<EmbeddingTable>>) -> Result<TrainedSystem> {
        let features = match self.features {
            None => None,
            Some(f) => {
                let table = match f.embedding_digest {
                    None => None,
                    Some(expected) => {
                        let table = embeddings.ok_or_else(|| {
                            Error::Config("this model needs the embedding table it was trained with".into())
                        })?;
                        if table.digest() != expected {
                            return Err(Error::Fingerprint {
                                expected: expected.to_string(),
                                actual: table.digest().to_string(),
                            });
                        }
                        Some(table)
                    }
                };
                let space = FeatureSpace::from_parts(f.config, f.vocabulary, table, f.contextual_dim)?;
                if space.fingerprint() != f.fingerprint {
                    return Err(Error::Fingerprint {
                        expected: f.fingerprint.to_string(),
                        actual: space.fingerprint().to_string(),
                    });
                }
                Some(space)
            }
        };
        if features.is_none() && !matches!(self.model, TrainedModel::Lesk { .. }) {
            return Err(Error::Config("model artifact lacks its feature space".into()));
        }
        Ok(TrainedSystem {
            id: self.id,
            spec: self.spec,
            labels: self.labels,
            features,
            model: self.model,
        })
    }
}

/// Check that `dataset` can be fed to `system`: same label set, and the
/// spans or vectors its features read are present.
pub fn check_compatible(system: &TrainedSystem, dataset: &Dataset) -> Result<()> {
    if dataset.label_set() != system.label_set() {
        return Err(Error::Config("dataset label set differs from the model's".into()));
    }
    if let Some(f) = system.features() {
        if f.config().action_oracle && !dataset.is_empty() && !dataset.has_action_spans() {
            return Err(Error::Config(
                "model uses the action oracle but the dataset has no action spans".into(),
            ));
        }
        if f.config().embedding == EmbeddingMode::ContextualPrecomputed
            && !dataset.is_empty()
            && !dataset.has_contextual_vectors()
        {
            return Err(Error::Config(
                "model uses contextual vectors but the dataset has none".into(),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_defaults_and_unknown_fields() {
        let s: ModelSpec = serde_json::from_str(r#"{"model":"knn"}"#).unwrap();
        assert_eq!(s, ModelSpec::Knn { k: 5 });
        let s: ModelSpec = serde_json::from_str(r#"{"model":"projection","hidden_layers":3}"#).unwrap();
        assert!(matches!(
            s,
            ModelSpec::Projection {
                hidden_layers: 3,
                epochs: 50,
                batch_size: 32,
                ..
            }
        ));
        assert_eq!(s.paradigm(), Paradigm::CandidateSelection);
        assert!(serde_json::from_str::<ModelSpec>(r#"{"model":"svm","gamma":1}"#).is_err());
        assert!(serde_json::from_str::<ModelSpec>(r#"{"model":"forest"}"#).is_err());
    }
}
