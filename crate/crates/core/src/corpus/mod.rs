//! Activity reports, label inventories, code definitions and fold plans.
//!
//! Everything here is immutable once constructed; constructors validate the
//! data-model invariants so downstream code can rely on them.

mod folds;
mod icf;
mod io;
mod synth;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use folds::{split_folds, Fold, FoldPlan};
pub use icf::{icf_mobility_definitions, icf_mobility_labels, reference_counts, reference_skew};
pub use io::{
    definitions_json, label_set_json, load_dataset, load_definitions, load_label_set, open_text, parse_definitions,
    save_dataset, save_definitions, save_label_set, write_dataset,
};
pub use synth::{
    attach_contextual_vectors, generate_synthetic, synthetic_embeddings, SynthConfig, TriggerLexicon, FILLER_WORDS,
    SYNTHETIC_VECTOR_SCALE,
};

/// Half-open token range `[start, end)` naming the Action inside a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionSpan {
    pub start: usize,
    pub end: usize,
}

impl ActionSpan {
    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index < self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// A short free-text description of an observed activity, plus its gold code.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivityReport {
    id: String,
    tokens: Vec<String>,
    action_span: Option<ActionSpan>,
    gold_label: String,
    contextual_vectors: Option<Vec<Vec<f64>>>,
}

impl ActivityReport {
    pub fn new(
        id: impl Into<String>,
        tokens: Vec<String>,
        action_span: Option<ActionSpan>,
        gold_label: impl Into<String>,
        contextual_vectors: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let id = id.into();
        if tokens.is_empty() {
            return Err(Error::invalid(&id, "report has no tokens"));
        }
        if let Some(span) = action_span {
            if span.is_empty() {
                return Err(Error::invalid(&id, "empty action span"));
            }
            if span.end > tokens.len() {
                return Err(Error::invalid(
                    &id,
                    format!(
                        "action span [{}, {}) exceeds {} tokens",
                        span.start,
                        span.end,
                        tokens.len()
                    ),
                ));
            }
        }
        if let Some(vectors) = &contextual_vectors {
            if vectors.len() != tokens.len() {
                return Err(Error::invalid(
                    &id,
                    format!("{} contextual vectors for {} tokens", vectors.len(), tokens.len()),
                ));
            }
            let dim = vectors[0].len();
            if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
                return Err(Error::invalid(&id, "contextual vectors have non-uniform dimension"));
            }
            if vectors.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::invalid(&id, "contextual vectors contain non-finite values"));
            }
        }
        Ok(ActivityReport {
            id,
            tokens,
            action_span,
            gold_label: gold_label.into(),
            contextual_vectors,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn action_span(&self) -> Option<ActionSpan> {
        self.action_span
    }

    pub fn gold_label(&self) -> &str {
        &self.gold_label
    }

    pub fn contextual_vectors(&self) -> Option<&[Vec<f64>]> {
        self.contextual_vectors.as_deref()
    }

    /// The report text as a single whitespace-joined string.
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    pub(crate) fn with_contextual_vectors(&self, vectors: Vec<Vec<f64>>) -> Result<Self> {
        ActivityReport::new(
            self.id.clone(),
            self.tokens.clone(),
            self.action_span,
            self.gold_label.clone(),
            Some(vectors),
        )
    }
}

/// Ordered label inventory. The order is shared by every label-indexed vector
/// and matrix in the toolkit and decides all ties.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LabelSetParts", into = "LabelSetParts")]
pub struct LabelSet {
    codes: Vec<String>,
    other: Option<usize>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelSetParts {
    codes: Vec<String>,
    #[serde(default)]
    other: Option<String>,
}

impl TryFrom<LabelSetParts> for LabelSet {
    type Error = Error;

    fn try_from(p: LabelSetParts) -> Result<Self> {
        LabelSet::new(p.codes, p.other.as_deref())
    }
}

impl From<LabelSet> for LabelSetParts {
    fn from(l: LabelSet) -> Self {
        LabelSetParts {
            other: l.other_label().map(str::to_string),
            codes: l.codes,
        }
    }
}

impl LabelSet {
    pub fn new(codes: Vec<String>, other: Option<&str>) -> Result<Self> {
        if codes.is_empty() {
            return Err(Error::Config("label set is empty".into()));
        }
        let mut index = HashMap::with_capacity(codes.len());
        for (i, code) in codes.iter().enumerate() {
            if code.is_empty() {
                return Err(Error::Config("label set contains an empty code".into()));
            }
            if index.insert(code.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate label {code}")));
            }
        }
        let other = match other {
            Some(o) => Some(
                *index
                    .get(o)
                    .ok_or_else(|| Error::Config(format!("other label {o} is not in the label set")))?,
            ),
            None => None,
        };
        Ok(LabelSet { codes, other, index })
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    pub fn code(&self, index: usize) -> &str {
        &self.codes[index]
    }

    pub fn index_of(&self, code: &str) -> Option<usize> {
        self.index.get(code).copied()
    }

    pub fn other_index(&self) -> Option<usize> {
        self.other
    }

    pub fn other_label(&self) -> Option<&str> {
        self.other.map(|i| self.codes[i].as_str())
    }

    pub fn is_other(&self, index: usize) -> bool {
        self.other == Some(index)
    }

    /// Indices of every label except the Other label, in label-set order.
    pub fn defined_indices(&self) -> Vec<usize> {
        (0..self.codes.len()).filter(|&i| !self.is_other(i)).collect()
    }
}

/// A child (four-character) code nested under a three-character code.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChildDefinition {
    pub code: String,
    pub name: String,
    pub definition: String,
}

impl ChildDefinition {
    pub fn text(&self) -> String {
        if self.name.is_empty() {
            self.definition.clone()
        } else {
            format!("{}: {}", self.name, self.definition)
        }
    }
}

/// Definition text for one code, with the definitions of its children.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeDefinition {
    code: String,
    name: String,
    primary_definition: String,
    children: Vec<ChildDefinition>,
}

impl CodeDefinition {
    pub fn new(
        code: impl Into<String>,
        name: impl Into<String>,
        primary_definition: impl Into<String>,
        children: Vec<ChildDefinition>,
    ) -> Result<Self> {
        let code = code.into();
        let primary_definition = primary_definition.into();
        if primary_definition.trim().is_empty() {
            return Err(Error::invalid(&code, "empty primary definition"));
        }
        Ok(CodeDefinition {
            code,
            name: name.into(),
            primary_definition,
            children,
        })
    }

    pub fn code(&self) -> &str {
        &self.code
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn primary_definition(&self) -> &str {
        &self.primary_definition
    }

    pub fn children(&self) -> &[ChildDefinition] {
        &self.children
    }

    /// Preferred name followed by the definition, e.g.
    /// `"Walking: Moving along a surface on foot"`.
    pub fn primary_text(&self) -> String {
        if self.name.is_empty() {
            self.primary_definition.clone()
        } else {
            format!("{}: {}", self.name, self.primary_definition)
        }
    }

    pub fn child_texts(&self) -> Vec<String> {
        self.children.iter().map(ChildDefinition::text).collect()
    }
}

/// Definitions for every non-Other label, ordered like the label set.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeDefinitions {
    definitions: Vec<CodeDefinition>,
    label_indices: Vec<usize>,
}

impl CodeDefinitions {
    /// Align `definitions` to `label_set`: exactly one per non-Other label.
    pub fn new(definitions: Vec<CodeDefinition>, label_set: &LabelSet) -> Result<Self> {
        let mut by_code: HashMap<&str, &CodeDefinition> = HashMap::new();
        for def in &definitions {
            match label_set.index_of(def.code()) {
                None => {
                    return Err(Error::invalid(
                        def.code(),
                        "definition for a code outside the label set",
                    ))
                }
                Some(i) if label_set.is_other(i) => {
                    return Err(Error::invalid(def.code(), "definition supplied for the other label"))
                }
                Some(_) => {}
            }
            if by_code.insert(def.code(), def).is_some() {
                return Err(Error::invalid(def.code(), "duplicate definition"));
            }
        }
        let missing: Vec<&str> = label_set
            .defined_indices()
            .into_iter()
            .map(|i| label_set.code(i))
            .filter(|c| !by_code.contains_key(c))
            .collect();
        if !missing.is_empty() {
            return Err(Error::Config(format!("missing definitions for {}", missing.join(", "))));
        }
        let label_indices = label_set.defined_indices();
        let ordered = label_indices
            .iter()
            .map(|&i| by_code[label_set.code(i)].clone())
            .collect();
        Ok(CodeDefinitions {
            definitions: ordered,
            label_indices,
        })
    }

    pub fn len(&self) -> usize {
        self.definitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.definitions.is_empty()
    }

    pub fn get(&self, code: &str) -> Option<&CodeDefinition> {
        self.definitions.iter().find(|d| d.code() == code)
    }

    pub fn iter(&self) -> impl Iterator<Item = &CodeDefinition> {
        self.definitions.iter()
    }

    /// Label-set index of each definition, in iteration order.
    pub fn label_indices(&self) -> &[usize] {
        &self.label_indices
    }

    pub fn as_slice(&self) -> &[CodeDefinition] {
        &self.definitions
    }
}

/// A validated collection of reports over one label set.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    reports: Vec<ActivityReport>,
    label_set: LabelSet,
}

impl Dataset {
    pub fn new(reports: Vec<ActivityReport>, label_set: LabelSet) -> Result<Self> {
        let mut seen = HashSet::with_capacity(reports.len());
        for report in &reports {
            if !seen.insert(report.id()) {
                return Err(Error::invalid(report.id(), "duplicate report id"));
            }
            if label_set.index_of(report.gold_label()).is_none() {
                return Err(Error::invalid(
                    report.id(),
                    format!("unknown label {}", report.gold_label()),
                ));
            }
        }
        Ok(Dataset { reports, label_set })
    }

    pub fn reports(&self) -> &[ActivityReport] {
        &self.reports
    }

    pub fn label_set(&self) -> &LabelSet {
        &self.label_set
    }

    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }

    /// Gold label index of every report, in dataset order.
    pub fn gold_indices(&self) -> Vec<usize> {
        self.reports
            .iter()
            .map(|r| {
                self.label_set
                    .index_of(r.gold_label())
                    .expect("validated at construction")
            })
            .collect()
    }

    /// Number of reports per label, in label-set order.
    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.label_set.len()];
        for g in self.gold_indices() {
            counts[g] += 1;
        }
        counts
    }

    pub fn has_action_spans(&self) -> bool {
        self.reports.iter().all(|r| r.action_span().is_some())
    }

    pub fn has_contextual_vectors(&self) -> bool {
        self.reports.iter().all(|r| r.contextual_vectors().is_some())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn report_rejects_empty_span() {
        let err = ActivityReport::new(
            "r1",
            toks(&["a", "b", "c"]),
            Some(ActionSpan { start: 2, end: 2 }),
            "d450",
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("empty action span"), "{err}");
    }

    #[test]
    fn report_rejects_span_past_end() {
        assert!(ActivityReport::new("r1", toks(&["a"]), Some(ActionSpan { start: 0, end: 2 }), "d450", None).is_err());
    }

    #[test]
    fn report_rejects_ragged_contextual_vectors() {
        let err = ActivityReport::new(
            "r1",
            toks(&["a", "b"]),
            None,
            "x",
            Some(vec![vec![1.0, 2.0], vec![1.0]]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("non-uniform"));
        assert!(ActivityReport::new("r1", toks(&["a", "b"]), None, "x", Some(vec![vec![1.0]])).is_err());
    }

    #[test]
    fn label_set_other_must_be_member() {
        assert!(LabelSet::new(toks(&["a", "b"]), Some("c")).is_err());
        assert!(LabelSet::new(toks(&["a", "a"]), None).is_err());
        let ls = LabelSet::new(toks(&["a", "b", "Other"]), Some("Other")).unwrap();
        assert_eq!(ls.other_index(), Some(2));
        assert_eq!(ls.defined_indices(), vec![0, 1]);
    }

    #[test]
    fn dataset_rejects_duplicates_and_unknown_labels() {
        let ls = LabelSet::new(toks(&["a", "b"]), None).unwrap();
        let r = |id: &str, l: &str| ActivityReport::new(id, toks(&["x"]), None, l, None).unwrap();
        assert!(Dataset::new(vec![r("1", "a"), r("1", "b")], ls.clone()).is_err());
        let err = Dataset::new(vec![r("1", "zz")], ls.clone()).unwrap_err();
        assert!(err.to_string().contains("unknown label"));
        let ds = Dataset::new(vec![r("1", "a"), r("2", "b"), r("3", "b")], ls).unwrap();
        assert_eq!(ds.label_counts(), vec![1, 2]);
    }

    #[test]
    fn definitions_align_to_label_order() {
        let ls = LabelSet::new(toks(&["b", "a", "Other"]), Some("Other")).unwrap();
        let def = |c: &str| CodeDefinition::new(c, c, "some text", vec![]).unwrap();
        let defs = CodeDefinitions::new(vec![def("a"), def("b")], &ls).unwrap();
        assert_eq!(defs.iter().map(|d| d.code()).collect::<Vec<_>>(), vec!["b", "a"]);
        assert_eq!(defs.label_indices(), &[0, 1]);
        let err = CodeDefinitions::new(vec![def("a")], &ls).unwrap_err();
        assert!(err.to_string().contains('b'));
        assert!(CodeDefinitions::new(vec![def("a"), def("b"), def("Other")], &ls).is_err());
    }
}
