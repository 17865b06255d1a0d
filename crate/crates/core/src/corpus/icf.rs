use super::{io::parse_definitions, CodeDefinitions, LabelSet};

const DEFINITIONS_JSON: &str = include_str!("../../data/icf_mobility_definitions.json");

/// The twelve mobility codes observed in the physical therapy corpus and
/// their annotated frequencies, followed by the Other label.
const REFERENCE_COUNTS: [(&str, usize); 13] = [
    ("d410", 838),
    ("d415", 612),
    ("d420", 522),
    ("d430", 44),
    ("d435", 2),
    ("d440", 10),
    ("d445", 66),
    ("d450", 1603),
    ("d455", 378),
    ("d460", 176),
    ("d470", 38),
    ("d475", 77),
    ("Other", 161),
];

pub const OTHER_LABEL: &str = "Other";

/// The 12 ICF mobility codes plus `Other`, in frequency-table order.
pub fn icf_mobility_labels() -> LabelSet {
    let codes = REFERENCE_COUNTS.iter().map(|(c, _)| c.to_string()).collect();
    LabelSet::new(codes, Some(OTHER_LABEL)).expect("static label table is valid")
}

/// Annotated frequency of each label, aligned with [`icf_mobility_labels`].
pub fn reference_counts() -> Vec<usize> {
    REFERENCE_COUNTS.iter().map(|(_, n)| *n).collect()
}

/// Label proportions of the annotated corpus (sums to 1).
pub fn reference_skew() -> Vec<f64> {
    let total: usize = REFERENCE_COUNTS.iter().map(|(_, n)| n).sum();
    REFERENCE_COUNTS.iter().map(|(_, n)| *n as f64 / total as f64).collect()
}

/// Bundled definitions of the 12 mobility codes and their children.
pub fn icf_mobility_definitions() -> CodeDefinitions {
    let labels = icf_mobility_labels();
    let defs =
        parse_definitions(DEFINITIONS_JSON, "<bundled definitions>".as_ref()).expect("bundled definitions parse");
    CodeDefinitions::new(defs, &labels).expect("bundled definitions cover the label set")
}
