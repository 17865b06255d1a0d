//! Report and definition representations: normalization, unigram vectors,
//! static/contextual embedding averages and their hybrid concatenation.

mod embedding;
mod text;
mod vocab;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::ActivityReport;
use crate::error::{Error, Result};

pub use embedding::{embed_definition, embed_report, load_embeddings, EmbeddingTable};
pub use text::{normalize_token, normalized_words, split_words};
pub use vocab::{build_vocabulary, unigram_vector, Vocabulary};

pub(crate) use embedding::mean_of;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnigramMode {
    None,
    Binary,
    Tfidf,
}

impl UnigramMode {
    pub fn as_str(self) -> &'static str {
        match self {
            UnigramMode::None => "none",
            UnigramMode::Binary => "binary",
            UnigramMode::Tfidf => "tfidf",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingMode {
    None,
    Static,
    ContextualPrecomputed,
}

impl EmbeddingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EmbeddingMode::None => "none",
            EmbeddingMode::Static => "static",
            EmbeddingMode::ContextualPrecomputed => "contextual_precomputed",
        }
    }
}

/// Which representation a system uses. When both a unigram and an embedding
/// mode are active the two are concatenated (embedding first).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    pub unigram: UnigramMode,
    pub embedding: EmbeddingMode,
    #[serde(default)]
    pub action_oracle: bool,
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.unigram == UnigramMode::None && self.embedding == EmbeddingMode::None {
            return Err(Error::Config(
                "feature config needs a unigram mode or an embedding mode".into(),
            ));
        }
        if self.action_oracle && self.embedding == EmbeddingMode::None {
            return Err(Error::Config(
                "the action oracle only applies to embedding features".into(),
            ));
        }
        Ok(())
    }

    pub fn is_hybrid(&self) -> bool {
        self.unigram != UnigramMode::None && self.embedding != EmbeddingMode::None
    }
}

/// Stable 64-bit identity of a feature map (configuration plus the content of
/// the vocabulary or embedding table it depends on).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Fingerprint(u64);

impl Fingerprint {
    /// SHA-256 over the length-prefixed parts, truncated to 64 bits.
    pub fn of<'a, I>(parts: I) -> Self
    where
        I: IntoIterator<Item = &'a [u8]>,
    {
        let mut h = Sha256::new();
        for p in parts {
            h.update((p.len() as u64).to_le_bytes());
            h.update(p);
        }
        let digest = h.finalize();
        let mut first = [0u8; 8];
        first.copy_from_slice(&digest[..8]);
        Fingerprint(u64::from_be_bytes(first))
    }

    pub fn to_bytes(self) -> [u8; 8] {
        self.0.to_be_bytes()
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl FromStr for Fingerprint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        u64::from_str_radix(s, 16)
            .map(Fingerprint)
            .map_err(|_| Error::Model(format!("malformed fingerprint {s:?}")))
    }
}

impl Serialize for Fingerprint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fingerprint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorKind {
    Unigram,
    Embedding,
    Hybrid,
}

/// A dense, finite feature vector tagged with the feature map that made it.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    fingerprint: Fingerprint,
    kind: VectorKind,
}

impl FeatureVector {
    /// Wrap raw values; fails on NaN or infinite entries.
    pub fn new(values: Vec<f64>, fingerprint: Fingerprint, kind: VectorKind) -> Result<Self> {
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::Model("feature vector has non-finite entries".into()));
        }
        Ok(FeatureVector {
            values,
            fingerprint,
            kind,
        })
    }

    pub(crate) fn from_parts(values: Vec<f64>, fingerprint: Fingerprint, kind: VectorKind) -> Self {
        debug_assert!(values.iter().all(|x| x.is_finite()));
        FeatureVector {
            values,
            fingerprint,
            kind,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    pub fn kind(&self) -> VectorKind {
        self.kind
    }
}

fn hybrid_fingerprint(embedding: Fingerprint, unigram: Fingerprint) -> Fingerprint {
    Fingerprint::of([b"hybrid".as_slice(), &embedding.to_bytes(), &unigram.to_bytes()])
}

/// Concatenate `[e ; u]`: the embedding part first, then the unigram part.
pub fn hybrid_vector(u: &FeatureVector, e: &FeatureVector) -> Result<FeatureVector> {
    if u.kind != VectorKind::Unigram || e.kind != VectorKind::Embedding {
        return Err(Error::Fingerprint {
            expected: "unigram + embedding parts".into(),
            actual: format!("{:?} + {:?}", u.kind, e.kind),
        });
    }
    let mut values = Vec::with_capacity(u.dim() + e.dim());
    values.extend_from_slice(&e.values);
    values.extend_from_slice(&u.values);
    Ok(FeatureVector::from_parts(
        values,
        hybrid_fingerprint(e.fingerprint, u.fingerprint),
        VectorKind::Hybrid,
    ))
}

/// A feature map fitted on one training split.
///
/// Holds the split's vocabulary (unigram modes) and the shared embedding
/// table (static mode); its fingerprint equals that of every vector it emits.
#[derive(Clone, Debug)]
pub struct FeatureSpace {
    config: FeatureConfig,
    vocabulary: Option<Vocabulary>,
    table: Option<Arc<EmbeddingTable>>,
    contextual_dim: Option<usize>,
    fingerprint: Fingerprint,
    dimension: usize,
}

impl FeatureSpace {
    /// Fit on training reports only; nothing from evaluation data leaks in.
    pub fn fit(config: FeatureConfig, train: &[&ActivityReport], table: Option<Arc<EmbeddingTable>>) -> Result<Self> {
        config.validate()?;
        let vocabulary = match config.unigram {
            UnigramMode::None => None,
            _ => Some(build_vocabulary(train)?),
        };
        let contextual_dim = match config.embedding {
            EmbeddingMode::ContextualPrecomputed => {
                let first = train
                    .first()
                    .ok_or_else(|| Error::Config("empty training split".into()))?;
                Some(
                    first.contextual_vectors().ok_or_else(|| {
                        Error::invalid(
                            first.id(),
                            "contextual embeddings requested but the report has no vectors",
                        )
                    })?[0]
                        .len(),
                )
            }
            _ => None,
        };
        FeatureSpace::from_parts(config, vocabulary, table, contextual_dim)
    }

    /// Reassemble a fitted space (e.g. from a saved model).
    pub fn from_parts(
        config: FeatureConfig,
        vocabulary: Option<Vocabulary>,
        table: Option<Arc<EmbeddingTable>>,
        contextual_dim: Option<usize>,
    ) -> Result<Self> {
        config.validate()?;
        let unigram = match (config.unigram, &vocabulary) {
            (UnigramMode::None, _) => None,
            (mode, Some(v)) => Some((vocab::unigram_fingerprint(v, mode), v.len())),
            (_, None) => return Err(Error::Config("unigram features need a vocabulary".into())),
        };
        let embedding = match config.embedding {
            EmbeddingMode::None => None,
            EmbeddingMode::Static => {
                let t = table
                    .as_deref()
                    .ok_or_else(|| Error::Config("static embeddings need an embedding table".into()))?;
                let dim = t.dimension() * if config.action_oracle { 2 } else { 1 };
                Some((
                    embedding::report_embedding_fingerprint(config.embedding, config.action_oracle, Some(t), None),
                    dim,
                ))
            }
            EmbeddingMode::ContextualPrecomputed => {
                let dim = contextual_dim
                    .ok_or_else(|| Error::Config("contextual embeddings need a vector dimension".into()))?;
                Some((
                    embedding::report_embedding_fingerprint(config.embedding, config.action_oracle, None, Some(dim)),
                    dim,
                ))
            }
        };
        let (fingerprint, dimension) = match (embedding, unigram) {
            (Some((e, de)), Some((u, du))) => (hybrid_fingerprint(e, u), de + du),
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => unreachable!("validated"),
        };
        Ok(FeatureSpace {
            config,
            vocabulary,
            table,
            contextual_dim,
            fingerprint,
            dimension,
        })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn vocabulary(&self) -> Option<&Vocabulary> {
        self.vocabulary.as_ref()
    }

    pub fn table(&self) -> Option<&EmbeddingTable> {
        self.table.as_deref()
    }

    pub fn contextual_dim(&self) -> Option<usize> {
        self.contextual_dim
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Embedding-only vector of a report (the `v_act` of candidate selection).
    pub fn embed(&self, report: &ActivityReport) -> Result<FeatureVector> {
        let v = embed_report(report, self.table.as_deref(), &self.config)?;
        if let Some(dim) = self.contextual_dim {
            if v.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    actual: v.dim(),
                });
            }
        }
        Ok(v)
    }

    /// The full configured representation of a report.
    pub fn transform(&self, report: &ActivityReport) -> Result<FeatureVector> {
        let unigram = self
            .vocabulary
            .as_ref()
            .map(|v| unigram_vector(report, v, self.config.unigram));
        let embedded = match self.config.embedding {
            EmbeddingMode::None => None,
            _ => Some(self.embed(report)?),
        };
        let v = match (unigram, embedded) {
            (Some(u), Some(e)) => hybrid_vector(&u, &e)?,
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => unreachable!("validated"),
        };
        debug_assert_eq!(v.fingerprint(), self.fingerprint);
        Ok(v)
    }
}
