//! Synthetic activity reports with planted labels.
//!
//! Each report of a defined code carries one to three *trigger* words taken
//! from that code's definition inside a context of therapy-note filler.
//! Trigger words are chosen so their stems occur in no other code's
//! (extended) definition and in no filler word; the code is therefore always
//! recoverable from lexical overlap when no noise is injected.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ActionSpan, ActivityReport, CodeDefinitions, Dataset, LabelSet};
use crate::error::{Error, Result};
use crate::features::{normalize_token, normalized_words, EmbeddingTable};
use crate::select::{is_stopword, lesk_preprocess, porter_stem};
use crate::util::{derive_seed, rng};

/// Therapy-note context words shared by all labels.
pub const FILLER_WORDS: &[&str] = &[
    "Pt",
    "pt.",
    "patient",
    "with",
    "min",
    "mod",
    "max",
    "assist",
    "CGA",
    "SBA",
    "cues",
    "verbal",
    "tactile",
    "supervision",
    "RW",
    "FWW",
    "gait",
    "belt",
    "tolerated",
    "session",
    "today",
    "fatigue",
    "reports",
    "noted",
    "good",
    "fair",
    "poor",
    "safety",
    "awareness",
    "therapist",
    "300ft",
    "150",
    "2x",
    "x3",
    "reps",
    "trials",
    "bilateral",
    "LE",
    "UE",
    "device",
    "guard",
    "standby",
    "minimal",
    "moderate",
    "maximal",
    "breaks",
    "initiation",
    "sequencing",
    "daily",
    "progress",
    "goal",
    "education",
    "vitals",
    "stable",
    "tele",
    "HR",
    "SpO2",
    "encouragement",
    "demonstrated",
];

/// Action words of Other-labeled reports: activities outside the mobility codes.
const OTHER_ACTION_WORDS: &[&str] = &[
    "breathing",
    "swallowing",
    "speech",
    "cognition",
    "sensation",
    "pain",
    "vision",
    "hearing",
    "dressing",
    "bathing",
    "grooming",
    "feeding",
    "voiding",
    "writing",
    "reading",
];

/// Per-code trigger words, aligned to the definitions' label order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerLexicon {
    label_indices: Vec<usize>,
    triggers: Vec<Vec<String>>,
    other_actions: Vec<String>,
}

fn stems_of(words: &[&str]) -> BTreeSet<String> {
    words.iter().flat_map(|w| lesk_preprocess(w)).collect()
}

impl TriggerLexicon {
    pub fn build(definitions: &CodeDefinitions) -> Result<Self> {
        let profiles: Vec<BTreeSet<String>> = definitions
            .iter()
            .map(|d| {
                let mut s = lesk_preprocess(&d.primary_text());
                for child in d.child_texts() {
                    s.extend(lesk_preprocess(&child));
                }
                s
            })
            .collect();
        let mut owners: BTreeMap<&str, usize> = BTreeMap::new();
        for p in &profiles {
            for stem in p {
                *owners.entry(stem).or_default() += 1;
            }
        }
        for (pool, name) in [(FILLER_WORDS, "filler"), (OTHER_ACTION_WORDS, "other-action")] {
            let clashes: Vec<String> = stems_of(pool)
                .into_iter()
                .filter(|s| owners.contains_key(s.as_str()))
                .collect();
            if !clashes.is_empty() {
                return Err(Error::Config(format!(
                    "{name} word stems occur in code definitions: {}",
                    clashes.join(", ")
                )));
            }
        }
        let mut triggers = Vec::with_capacity(profiles.len());
        for (d, p) in definitions.iter().zip(&profiles) {
            let mut seen = BTreeSet::new();
            let words: Vec<String> = normalized_words(&d.primary_text())
                .into_iter()
                .filter(|w| !is_stopword(w))
                .filter(|w| {
                    let stem = porter_stem(w);
                    p.contains(&stem) && owners[stem.as_str()] == 1 && seen.insert(stem)
                })
                .collect();
            if words.is_empty() {
                return Err(Error::invalid(d.code(), "definition has no word unique to this code"));
            }
            triggers.push(words);
        }
        Ok(TriggerLexicon {
            label_indices: definitions.label_indices().to_vec(),
            triggers,
            other_actions: OTHER_ACTION_WORDS.iter().map(|w| w.to_string()).collect(),
        })
    }

    pub fn label_indices(&self) -> &[usize] {
        &self.label_indices
    }

    /// Trigger words of the code at `label_index`, if it is defined.
    pub fn triggers(&self, label_index: usize) -> Option<&[String]> {
        self.label_indices
            .iter()
            .position(|&l| l == label_index)
            .map(|p| self.triggers[p].as_slice())
    }

    pub fn other_actions(&self) -> &[String] {
        &self.other_actions
    }
}

/// Generator settings. `skew` holds one probability per label, in label-set
/// order; `noise_rate` is the chance that a context word is replaced by a
/// trigger word of a different code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub skew: Vec<f64>,
    pub seed: u64,
    pub noise_rate: f64,
    pub context_words: (usize, usize),
    pub action_words: (usize, usize),
}

impl SynthConfig {
    pub fn new(n: usize, skew: Vec<f64>, seed: u64) -> Self {
        SynthConfig {
            n,
            skew,
            seed,
            noise_rate: 0.0,
            context_words: (2, 8),
            action_words: (1, 3),
        }
    }

    fn validate(&self, label_set: &LabelSet) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("synthetic dataset size must be positive".into()));
        }
        if self.skew.len() != label_set.len() {
            return Err(Error::Config(format!(
                "skew has {} entries for {} labels",
                self.skew.len(),
                label_set.len()
            )));
        }
        if self.skew.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Config("skew entries must be non-negative".into()));
        }
        let total: f64 = self.skew.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("skew sums to {total}, not 1")));
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return Err(Error::Config("noise rate must lie in [0, 1]".into()));
        }
        let (c0, c1) = self.context_words;
        let (a0, a1) = self.action_words;
        if c0 > c1 || a0 == 0 || a0 > a1 {
            return Err(Error::Config("invalid context or action length range".into()));
        }
        Ok(())
    }
}

/// Label counts `n · p` rounded by largest remainder; they sum to exactly `n`.
fn quotas(n: usize, skew: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = skew.iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..skew.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Generate `config.n` reports whose label frequencies follow `config.skew`
/// exactly up to rounding. Every report has one contiguous action span:
/// trigger words for defined codes, out-of-domain activity words for Other.
pub fn generate_synthetic(
    definitions: &CodeDefinitions,
    label_set: &LabelSet,
    config: &SynthConfig,
) -> Result<Dataset> {
    config.validate(label_set)?;
    let lexicon = TriggerLexicon::build(definitions)?;
    for (i, &p) in config.skew.iter().enumerate() {
        if p > 0.0 && !label_set.is_other(i) && lexicon.triggers(i).is_none() {
            return Err(Error::Config(format!("label {} has no definition", label_set.code(i))));
        }
    }
    let mut labels: Vec<usize> = quotas(config.n, &config.skew)
        .into_iter()
        .enumerate()
        .flat_map(|(l, c)| std::iter::repeat_n(l, c))
        .collect();
    let mut r = rng(config.seed);
    labels.shuffle(&mut r);
    let width = config.n.to_string().len();
    let reports = labels
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            let mut r = rng(derive_seed(config.seed, 2, i as u64));
            let (tokens, span) = synth_tokens(&lexicon, label, config, &mut r);
            ActivityReport::new(
                format!("syn{:0width$}", i + 1),
                tokens,
                Some(span),
                label_set.code(label),
                None,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(reports, label_set.clone())
}

fn synth_tokens(
    lexicon: &TriggerLexicon,
    label: usize,
    config: &SynthConfig,
    r: &mut ChaCha8Rng,
) -> (Vec<String>, ActionSpan) {
    let pool = lexicon.triggers(label).unwrap_or(lexicon.other_actions());
    let n_action = r.gen_range(config.action_words.0..=config.action_words.1);
    let action: Vec<String> = (0..n_action)
        .map(|_| pool.choose(r).expect("non-empty").clone())
        .collect();
    let n_context = r.gen_range(config.context_words.0..=config.context_words.1);
    let others: Vec<usize> = (0..lexicon.triggers.len())
        .filter(|&p| lexicon.label_indices[p] != label)
        .collect();
    let context: Vec<String> = (0..n_context)
        .map(|_| {
            if config.noise_rate > 0.0 && r.gen_bool(config.noise_rate) {
                let p = *others.choose(r).expect("more than one code");
                lexicon.triggers[p].choose(r).expect("non-empty").clone()
            } else {
                FILLER_WORDS.choose(r).expect("non-empty").to_string()
            }
        })
        .collect();
    let start = r.gen_range(0..=n_context);
    let mut tokens = context[..start].to_vec();
    tokens.extend(action);
    tokens.extend_from_slice(&context[start..]);
    (
        tokens,
        ActionSpan {
            start,
            end: start + n_action,
        },
    )
}

/// Length of the synthetic topic and word vectors, in the range of trained
/// word2vec vectors.
pub const SYNTHETIC_VECTOR_SCALE: f64 = 3.0;

fn random_unit(dim: usize, r: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Word vectors with topic structure: each code's trigger words, the Other
/// activity words and the filler words each cluster around their own random
/// topic vector; every other definition word gets an independent random
/// direction. Topics and lone words have length [`SYNTHETIC_VECTOR_SCALE`].
pub fn synthetic_embeddings(definitions: &CodeDefinitions, dimension: usize, seed: u64) -> Result<EmbeddingTable> {
    if dimension == 0 {
        return Err(Error::Config("embedding dimension must be positive".into()));
    }
    let lexicon = TriggerLexicon::build(definitions)?;
    let mut r = rng(seed);
    let mut vectors: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let topical = |words: &[String], r: &mut ChaCha8Rng, vectors: &mut BTreeMap<String, Vec<f64>>| {
        let topic = random_unit(dimension, r);
        for w in words {
            let u = random_unit(dimension, r);
            vectors
                .entry(w.clone())
                .or_insert_with(|| topic.iter().zip(&u).map(|(t, x)| t + 0.5 * x).collect());
        }
    };
    for words in &lexicon.triggers {
        topical(words, &mut r, &mut vectors);
    }
    topical(&lexicon.other_actions, &mut r, &mut vectors);
    let filler: Vec<String> = FILLER_WORDS.iter().map(|w| normalize_token(w)).collect();
    topical(&filler, &mut r, &mut vectors);
    let mut rest = BTreeSet::new();
    for d in definitions.iter() {
        rest.extend(normalized_words(&d.primary_text()));
        for child in d.child_texts() {
            rest.extend(normalized_words(&child));
        }
    }
    for w in rest {
        vectors.entry(w).or_insert_with(|| random_unit(dimension, &mut r));
    }
    let scaled = vectors
        .into_iter()
        .map(|(w, v)| (w, v.into_iter().map(|x| x * SYNTHETIC_VECTOR_SCALE).collect()));
    EmbeddingTable::from_rows(dimension, scaled)
}

/// Attach per-token vectors that mimic contextual embeddings: each token's
/// static vector (zero when missing) plus `mix` times the report's mean
/// static vector.
pub fn attach_contextual_vectors(dataset: &Dataset, table: &EmbeddingTable, mix: f64) -> Result<Dataset> {
    let dim = table.dimension();
    let reports = dataset
        .reports()
        .iter()
        .map(|report| {
            let statics: Vec<Vec<f64>> = report
                .tokens()
                .iter()
                .map(|t| {
                    table
                        .get(&normalize_token(t))
                        .map_or_else(|| vec![0.0; dim], <[f64]>::to_vec)
                })
                .collect();
            let mean = crate::features::mean_of(dim, statics.iter().map(Vec::as_slice));
            let vectors = statics
                .into_iter()
                .map(|v| v.iter().zip(&mean).map(|(x, m)| x + mix * m).collect())
                .collect();
            report.with_contextual_vectors(vectors)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(reports, dataset.label_set().clone())
}
