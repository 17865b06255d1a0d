use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{is_stopword, porter_stem};
use crate::corpus::{ActivityReport, CodeDefinitions};
use crate::error::{Error, Result};
use crate::features::{normalize_token, split_words};

/// Lowercase, drop stopwords, Porter-stem and deduplicate.
pub fn lesk_preprocess(text: &str) -> BTreeSet<String> {
    split_words(text)
        .map(normalize_token)
        .filter(|w| !w.is_empty() && !is_stopword(w))
        .map(|w| porter_stem(&w))
        .collect()
}

/// Binary word-set profiles of the defined codes, built from definitions only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeskProfile {
    vocabulary: BTreeMap<String, usize>,
    /// Sorted vocabulary indices of each code's words, in label order.
    profiles: Vec<Vec<usize>>,
    label_indices: Vec<usize>,
    extended: bool,
}

impl LeskProfile {
    /// With `extended`, each code's child definitions join its word set.
    pub fn build(definitions: &CodeDefinitions, extended: bool) -> Result<Self> {
        let sets: Vec<BTreeSet<String>> = definitions
            .iter()
            .map(|d| {
                let mut words = lesk_preprocess(&d.primary_text());
                if extended {
                    for child in d.child_texts() {
                        words.extend(lesk_preprocess(&child));
                    }
                }
                words
            })
            .collect();
        for (d, s) in definitions.iter().zip(&sets) {
            if s.is_empty() {
                return Err(Error::invalid(d.code(), "definition has no content words"));
            }
        }
        let all: BTreeSet<&String> = sets.iter().flatten().collect();
        let vocabulary: BTreeMap<String, usize> = all.into_iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let profiles = sets.iter().map(|s| s.iter().map(|w| vocabulary[w]).collect()).collect();
        Ok(LeskProfile {
            vocabulary,
            profiles,
            label_indices: definitions.label_indices().to_vec(),
            extended,
        })
    }

    pub fn extended(&self) -> bool {
        self.extended
    }

    pub fn label_indices(&self) -> &[usize] {
        &self.label_indices
    }

    /// Stemmed words of one code's profile.
    pub fn words(&self, position: usize) -> Vec<&str> {
        let by_index: Vec<&str> = self.vocabulary.keys().map(String::as_str).collect();
        self.profiles[position].iter().map(|&i| by_index[i]).collect()
    }

    /// Cosine between the binary word vector of `words` and every profile.
    pub fn scores(&self, words: &BTreeSet<String>) -> Vec<f64> {
        let hits: BTreeSet<usize> = words.iter().filter_map(|w| self.vocabulary.get(w).copied()).collect();
        self.profiles
            .iter()
            .map(|p| {
                let overlap = p.iter().filter(|i| hits.contains(i)).count();
                if overlap == 0 {
                    0.0
                } else {
                    overlap as f64 / ((words.len() * p.len()) as f64).sqrt()
                }
            })
            .collect()
    }
}

/// Code with the highest Lesk cosine for the report's full text, as a label
/// index. Reports overlapping no profile get `fallback`; ties go to the
/// earlier label.
pub fn lesk_select(report: &ActivityReport, profile: &LeskProfile, fallback: usize) -> usize {
    let scores = profile.scores(&lesk_preprocess(&report.text()));
    let mut best: Option<(usize, f64)> = None;
    for (pos, &s) in scores.iter().enumerate() {
        if s > 0.0 && best.is_none_or(|(_, b)| s > b) {
            best = Some((pos, s));
        }
    }
    best.map_or(fallback, |(pos, _)| profile.label_indices[pos])
}
