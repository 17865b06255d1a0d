use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use icf_core::corpus::LabelSet;
use icf_core::eval::{MetricsReport, PredictionRecord};
use icf_core::util::{sha256_hex, write_atomic};

use crate::config::InputFile;

#[derive(Serialize)]
struct OutputFile {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a, S: Serialize> {
    command: &'a str,
    version: &'a str,
    inputs: &'a [InputFile],
    settings: S,
    outputs: Vec<OutputFile>,
}

/// Collects output files in memory and writes them, then a manifest with
/// every input and output hash, each through write-then-rename.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Self {
        Artifacts {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    pub fn write<S: Serialize>(self, command: &str, inputs: &[InputFile], settings: S) -> Result<()> {
        std::fs::create_dir_all(&self.dir).with_context(|| format!("cannot create {}", self.dir.display()))?;
        let mut outputs = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            write_atomic(&self.dir.join(name), bytes)?;
            outputs.push(OutputFile {
                path: name.clone(),
                sha256: sha256_hex(bytes),
            });
        }
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            inputs,
            settings,
            outputs,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        write_atomic(&self.dir.join("manifest.json"), &bytes)?;
        Ok(())
    }
}

pub fn predictions_csv(records: &[PredictionRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "gold", "pred", "fold", "system"])?;
    for r in records {
        w.write_record([r.id.as_str(), &r.gold, &r.pred, &r.fold.to_string(), &r.system])?;
    }
    Ok(w.into_inner()?)
}

/// Rows are gold labels, columns predicted labels, both in label-set order.
pub fn confusion_csv(report: &MetricsReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["gold\\pred".to_string()];
    header.extend(report.labels.iter().cloned());
    w.write_record(&header)?;
    for (label, row) in report.labels.iter().zip(&report.confusion) {
        let mut record = vec![label.clone()];
        record.extend(row.iter().map(usize::to_string));
        w.write_record(&record)?;
    }
    Ok(w.into_inner()?)
}

pub fn per_label_csv(rows: &[(&str, &MetricsReport)]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["system", "mode", "label", "precision", "recall", "f1", "support"])?;
    for (system, report) in rows {
        for l in &report.per_label {
            w.write_record([
                system.to_string(),
                report.mode.as_str().to_string(),
                l.label.clone(),
                l.precision.to_string(),
                l.recall.to_string(),
                l.f1.to_string(),
                l.support.to_string(),
            ])?;
        }
    }
    Ok(w.into_inner()?)
}

/// `id,gold,pred`, plus one `score_<code>` column per candidate code when
/// scores are given.
pub fn scored_predictions_csv(
    rows: &[(String, String, String, Option<Vec<f64>>)],
    labels: &LabelSet,
    candidates: Option<&[usize]>,
) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id".to_string(), "gold".to_string(), "pred".to_string()];
    if let Some(c) = candidates {
        header.extend(c.iter().map(|&l| format!("score_{}", labels.code(l))));
    }
    w.write_record(&header)?;
    for (id, gold, pred, scores) in rows {
        let mut record = vec![id.clone(), gold.clone(), pred.clone()];
        if let Some(s) = scores {
            record.extend(s.iter().map(f64::to_string));
        }
        w.write_record(&record)?;
    }
    Ok(w.into_inner()?)
}
