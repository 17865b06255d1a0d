use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{normalize_token, FeatureVector, Fingerprint, UnigramMode, VectorKind};
use crate::corpus::ActivityReport;
use crate::error::{Error, Result};

/// Unigram vocabulary with per-word document frequencies over a training set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyParts", into = "VocabularyParts")]
pub struct Vocabulary {
    words: Vec<String>,
    document_frequency: Vec<usize>,
    n_documents: usize,
    index: HashMap<String, usize>,
    digest: Fingerprint,
}

#[derive(Serialize, Deserialize)]
struct VocabularyParts {
    words: Vec<String>,
    document_frequency: Vec<usize>,
    n_documents: usize,
}

impl TryFrom<VocabularyParts> for Vocabulary {
    type Error = Error;

    fn try_from(p: VocabularyParts) -> Result<Self> {
        Vocabulary::from_parts(p.words, p.document_frequency, p.n_documents)
    }
}

impl From<Vocabulary> for VocabularyParts {
    fn from(v: Vocabulary) -> Self {
        VocabularyParts {
            words: v.words,
            document_frequency: v.document_frequency,
            n_documents: v.n_documents,
        }
    }
}

impl Vocabulary {
    pub fn from_parts(words: Vec<String>, document_frequency: Vec<usize>, n_documents: usize) -> Result<Self> {
        if words.len() != document_frequency.len() {
            return Err(Error::Model("vocabulary words and frequencies differ in length".into()));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, (w, &df)) in words.iter().zip(&document_frequency).enumerate() {
            if df == 0 || df > n_documents {
                return Err(Error::Model(format!(
                    "document frequency {df} of {w:?} outside 1..={n_documents}"
                )));
            }
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::Model(format!("duplicate vocabulary word {w:?}")));
            }
        }
        let mut parts: Vec<Vec<u8>> = vec![b"vocabulary".to_vec(), n_documents.to_le_bytes().to_vec()];
        for (w, df) in words.iter().zip(&document_frequency) {
            parts.push(w.as_bytes().to_vec());
            parts.push(df.to_le_bytes().to_vec());
        }
        let digest = Fingerprint::of(parts.iter().map(Vec::as_slice));
        Ok(Vocabulary {
            words,
            document_frequency,
            n_documents,
            index,
            digest,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn document_frequency(&self, word: &str) -> Option<usize> {
        self.index_of(word).map(|i| self.document_frequency[i])
    }

    pub fn n_documents(&self) -> usize {
        self.n_documents
    }

    /// Content identity: equal vocabularies have equal digests.
    pub fn digest(&self) -> Fingerprint {
        self.digest
    }

    /// `ln(N / df)` for the word at `index`.
    pub fn idf(&self, index: usize) -> f64 {
        (self.n_documents as f64 / self.document_frequency[index] as f64).ln()
    }
}

/// Build a vocabulary over the normalized tokens of the training reports.
/// Words are indexed in lexicographic order; each report contributes at most
/// one to a word's document frequency.
pub fn build_vocabulary(train: &[&ActivityReport]) -> Result<Vocabulary> {
    if train.is_empty() {
        return Err(Error::Config("cannot build a vocabulary from zero reports".into()));
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for report in train {
        let present: BTreeSet<String> = report
            .tokens()
            .iter()
            .map(|t| normalize_token(t))
            .filter(|t| !t.is_empty())
            .collect();
        for w in present {
            *df.entry(w).or_default() += 1;
        }
    }
    let (words, freqs) = df.into_iter().unzip();
    Vocabulary::from_parts(words, freqs, train.len())
}

pub(crate) fn unigram_fingerprint(vocab: &Vocabulary, mode: UnigramMode) -> Fingerprint {
    Fingerprint::of([
        b"unigram".as_slice(),
        mode.as_str().as_bytes(),
        &vocab.digest().to_bytes(),
    ])
}

/// Binary or TF-IDF unigram vector; out-of-vocabulary words are ignored.
///
/// # Panics
/// If `mode` is [`UnigramMode::None`].
pub fn unigram_vector(report: &ActivityReport, vocab: &Vocabulary, mode: UnigramMode) -> FeatureVector {
    let mut values = vec![0.0; vocab.len()];
    for token in report.tokens() {
        if let Some(i) = vocab.index_of(&normalize_token(token)) {
            match mode {
                UnigramMode::Binary => values[i] = 1.0,
                UnigramMode::Tfidf => values[i] += 1.0,
                UnigramMode::None => panic!("unigram_vector called with unigram mode none"),
            }
        }
    }
    if mode == UnigramMode::Tfidf {
        for (i, v) in values.iter_mut().enumerate() {
            if *v != 0.0 {
                *v *= vocab.idf(i);
            }
        }
    }
    FeatureVector::from_parts(values, unigram_fingerprint(vocab, mode), VectorKind::Unigram)
}
