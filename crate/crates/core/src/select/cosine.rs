use serde::{Deserialize, Serialize};

use crate::corpus::CodeDefinitions;
use crate::error::{Error, Result};
use crate::features::{embed_definition, EmbeddingTable, FeatureVector, Fingerprint};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Definition embeddings of the defined codes, in label order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeEmbeddingSet {
    label_indices: Vec<usize>,
    vectors: Vec<Vec<f64>>,
    extended: bool,
    duplicated: bool,
    fingerprint: Fingerprint,
}

impl CodeEmbeddingSet {
    /// Embed every definition; `duplicated` repeats each vector to match
    /// `[context ; action]` report vectors.
    pub fn build(
        definitions: &CodeDefinitions,
        table: &EmbeddingTable,
        extended: bool,
        duplicated: bool,
    ) -> Result<Self> {
        let vectors: Vec<FeatureVector> = definitions
            .iter()
            .map(|d| embed_definition(d, table, extended, duplicated))
            .collect::<Result<_>>()?;
        let fingerprint = vectors[0].fingerprint();
        let vectors = vectors.into_iter().map(|v| v.values().to_vec()).collect();
        CodeEmbeddingSet::from_vectors(
            definitions.label_indices().to_vec(),
            vectors,
            extended,
            duplicated,
            fingerprint,
        )
    }

    pub fn from_vectors(
        label_indices: Vec<usize>,
        vectors: Vec<Vec<f64>>,
        extended: bool,
        duplicated: bool,
        fingerprint: Fingerprint,
    ) -> Result<Self> {
        if vectors.is_empty() || vectors.len() != label_indices.len() {
            return Err(Error::Config("code embedding set needs one vector per code".into()));
        }
        let dim = vectors[0].len();
        for v in &vectors {
            if v.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    actual: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Model("code embedding has non-finite entries".into()));
            }
        }
        Ok(CodeEmbeddingSet {
            label_indices,
            vectors,
            extended,
            duplicated,
            fingerprint,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vector(&self, position: usize) -> &[f64] {
        &self.vectors[position]
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn label_indices(&self) -> &[usize] {
        &self.label_indices
    }

    pub fn extended(&self) -> bool {
        self.extended
    }

    pub fn duplicated(&self) -> bool {
        self.duplicated
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    pub(crate) fn check_dimension(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dimension() {
            return Err(Error::Dimension {
                expected: self.dimension(),
                actual: v.len(),
            });
        }
        Ok(())
    }
}

/// `cos(a, b) · |a·b| / |b|²`, computed as `(a·b)|a·b| / (|a| |b|³)`.
/// A zero `a` scores 0; a zero `b` is an error.
pub fn combined_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: b.len(),
            actual: a.len(),
        });
    }
    let bb = dot(b, b);
    if bb == 0.0 {
        return Err(Error::Model("combined similarity against a zero code vector".into()));
    }
    let aa = dot(a, a);
    if aa == 0.0 {
        return Ok(0.0);
    }
    let d = dot(a, b);
    Ok(d * d.abs() / ((aa * bb).sqrt() * bb))
}

pub(crate) fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let denom = (dot(a, a) * dot(b, b)).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        dot(a, b) / denom
    }
}

/// First position holding the maximum; NaN never wins.
pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] || scores[best].is_nan() {
            best = i;
        }
    }
    best
}

/// Plain cosine between the report vector and every code vector.
pub fn cosine_scores(v_act: &[f64], codes: &CodeEmbeddingSet) -> Result<Vec<f64>> {
    codes.check_dimension(v_act)?;
    Ok(codes.vectors.iter().map(|c| cosine(v_act, c)).collect())
}

/// Label index of the code most cosine-similar to `v_act`. A zero report
/// vector selects the first code; ties go to the earlier label.
pub fn cosine_select(v_act: &[f64], codes: &CodeEmbeddingSet) -> Result<usize> {
    let scores = cosine_scores(v_act, codes)?;
    Ok(codes.label_indices[argmax(&scores)])
}
