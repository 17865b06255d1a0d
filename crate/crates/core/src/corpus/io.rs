//! File formats: JSON Lines datasets, JSON definitions and label sets.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};

use super::{ActionSpan, ActivityReport, ChildDefinition, CodeDefinition, CodeDefinitions, Dataset, LabelSet};
use crate::error::{Error, Result};
use crate::util::write_atomic;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportRecord {
    id: String,
    tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    action_span: Option<[usize; 2]>,
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    contextual_vectors: Option<Vec<Vec<f64>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DefinitionRecord {
    code: String,
    #[serde(default)]
    name: String,
    definition: String,
    #[serde(default)]
    children: Vec<ChildDefinition>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LabelSetRecord {
    Plain(Vec<String>),
    WithOther {
        codes: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        other: Option<String>,
    },
}

/// Open a text file for reading, transparently decompressing gzip input.
pub fn open_text(path: &Path) -> Result<Box<dyn BufRead>> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut magic = [0u8; 2];
    let n = file.read(&mut magic).map_err(|e| Error::io(path, e))?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    if n == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(BufReader::new(GzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

fn read_all(path: &Path) -> Result<String> {
    let mut text = String::new();
    open_text(path)?
        .read_to_string(&mut text)
        .map_err(|e| Error::io(path, e))?;
    Ok(text)
}

/// Load a JSON Lines dataset and validate it against `label_set`.
///
/// Blank lines are skipped. Parse errors carry the 1-based line number;
/// invariant violations name the offending record and line.
pub fn load_dataset(path: &Path, label_set: &LabelSet) -> Result<Dataset> {
    let reader = open_text(path)?;
    let mut reports = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ReportRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        let located = |e: Error| match e {
            Error::Invalid { record, message } => Error::Invalid {
                record,
                message: format!("{message} (line {line_no})"),
            },
            other => other,
        };
        if label_set.index_of(&record.label).is_none() {
            return Err(located(Error::invalid(
                &record.id,
                format!("unknown label {}", record.label),
            )));
        }
        let span = record.action_span.map(|[start, end]| ActionSpan { start, end });
        let report = ActivityReport::new(record.id, record.tokens, span, record.label, record.contextual_vectors)
            .map_err(located)?;
        reports.push(report);
    }
    Dataset::new(reports, label_set.clone())
}

/// Serialize a dataset as JSON Lines to any writer.
pub fn write_dataset<W: Write>(dataset: &Dataset, mut out: W) -> std::io::Result<()> {
    for r in dataset.reports() {
        let record = ReportRecord {
            id: r.id().to_string(),
            tokens: r.tokens().to_vec(),
            action_span: r.action_span().map(|s| [s.start, s.end]),
            label: r.gold_label().to_string(),
            contextual_vectors: r.contextual_vectors().map(<[_]>::to_vec),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_dataset(dataset, &mut buf).map_err(|e| Error::io(path, e))?;
    write_atomic(path, &buf)
}

pub fn parse_definitions(text: &str, path: &Path) -> Result<Vec<CodeDefinition>> {
    let records: Vec<DefinitionRecord> = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    records
        .into_iter()
        .map(|r| CodeDefinition::new(r.code, r.name, r.definition, r.children))
        .collect()
}

/// Load code definitions; exactly one per non-Other label is required.
pub fn load_definitions(path: &Path, label_set: &LabelSet) -> Result<CodeDefinitions> {
    let defs = parse_definitions(&read_all(path)?, path)?;
    CodeDefinitions::new(defs, label_set)
}

pub fn save_definitions(defs: &CodeDefinitions, path: &Path) -> Result<()> {
    write_atomic(path, &definitions_json(defs))
}

/// The definitions file format, as bytes.
pub fn definitions_json(defs: &CodeDefinitions) -> Vec<u8> {
    let records: Vec<DefinitionRecord> = defs
        .iter()
        .map(|d| DefinitionRecord {
            code: d.code().to_string(),
            name: d.name().to_string(),
            definition: d.primary_definition().to_string(),
            children: d.children().to_vec(),
        })
        .collect();
    serde_json::to_vec_pretty(&records).expect("definitions serialize")
}

/// Load a label set: either a bare JSON array of codes, or an object
/// `{"codes": [...], "other": "Other"}`.
pub fn load_label_set(path: &Path) -> Result<LabelSet> {
    let text = read_all(path)?;
    let record: LabelSetRecord = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    match record {
        LabelSetRecord::Plain(codes) => LabelSet::new(codes, None),
        LabelSetRecord::WithOther { codes, other } => LabelSet::new(codes, other.as_deref()),
    }
}

pub fn save_label_set(labels: &LabelSet, path: &Path) -> Result<()> {
    write_atomic(path, &label_set_json(labels))
}

/// The label set file format, as bytes.
pub fn label_set_json(labels: &LabelSet) -> Vec<u8> {
    let record = LabelSetRecord::WithOther {
        codes: labels.codes().to_vec(),
        other: labels.other_label().map(str::to_string),
    };
    serde_json::to_vec_pretty(&record).expect("label set serializes")
}
