use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use super::{normalize_token, normalized_words, EmbeddingMode, FeatureConfig, FeatureVector, Fingerprint, VectorKind};
use crate::corpus::{open_text, ActivityReport, CodeDefinition};
use crate::error::{Error, Result};

/// Static word vectors of a fixed dimension.
#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    dimension: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    digest: Fingerprint,
}

impl EmbeddingTable {
    /// Build a table from `(word, vector)` rows; later duplicates are dropped.
    pub fn from_rows<I>(dimension: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        if dimension == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        let mut table = EmbeddingTable {
            dimension,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
            digest: Fingerprint::default(),
        };
        for (word, vector) in rows {
            if vector.len() != dimension {
                return Err(Error::Dimension {
                    expected: dimension,
                    actual: vector.len(),
                });
            }
            table.push(word, &vector)?;
        }
        table.seal();
        Ok(table)
    }

    fn push(&mut self, word: String, vector: &[f64]) -> Result<()> {
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid(word, "non-finite embedding value"));
        }
        if self.index.contains_key(&word) {
            return Ok(());
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    fn seal(&mut self) {
        let mut bytes = Vec::with_capacity(self.data.len() * 8 + self.words.len() * 8);
        bytes.extend_from_slice(&self.dimension.to_le_bytes());
        for (i, w) in self.words.iter().enumerate() {
            bytes.extend_from_slice(&w.len().to_le_bytes());
            bytes.extend_from_slice(w.as_bytes());
            for x in self.row(i) {
                bytes.extend_from_slice(&x.to_le_bytes());
            }
        }
        self.digest = Fingerprint::of([b"embeddings".as_slice(), &bytes]);
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.row(i))
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Content identity of the table.
    pub fn digest(&self) -> Fingerprint {
        self.digest
    }

    /// Serialize in word2vec text format.
    pub fn to_word2vec_text(&self) -> String {
        let mut out = format!("{} {}\n", self.len(), self.dimension);
        for (i, w) in self.words.iter().enumerate() {
            out.push_str(w);
            for x in self.row(i) {
                out.push(' ');
                out.push_str(&format!("{x}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Load word vectors in word2vec text format (optionally gzip-compressed):
/// a `V D` header followed by `V` lines of `word v1 ... vD`.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = open_text(path)?.lines();
    let header = match lines.next() {
        Some(h) => h.map_err(|e| Error::io(path, e))?,
        None => return Err(parse_err(1, "empty embedding file".into())),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (declared, dimension) = match fields.as_slice() {
        [v, d] => match (v.parse::<usize>(), d.parse::<usize>()) {
            (Ok(v), Ok(d)) if d > 0 => (v, d),
            _ => return Err(parse_err(1, format!("malformed header {header:?}"))),
        },
        _ => return Err(parse_err(1, format!("malformed header {header:?}"))),
    };
    let mut table = EmbeddingTable {
        dimension,
        words: Vec::with_capacity(declared),
        index: HashMap::with_capacity(declared),
        data: Vec::with_capacity(declared * dimension),
        digest: Fingerprint::default(),
    };
    let mut rows = 0;
    let mut vector = Vec::with_capacity(dimension);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().expect("non-empty line").to_string();
        vector.clear();
        for p in parts {
            let x: f64 = p.parse().map_err(|_| parse_err(line_no, format!("bad value {p:?}")))?;
            vector.push(x);
        }
        if vector.len() != dimension {
            return Err(parse_err(
                line_no,
                format!("expected {dimension} values, found {}", vector.len()),
            ));
        }
        table
            .push(word, &vector)
            .map_err(|e| parse_err(line_no, e.to_string()))?;
        rows += 1;
    }
    if rows != declared {
        return Err(parse_err(
            1,
            format!("header declares {declared} rows, file has {rows}"),
        ));
    }
    table.seal();
    Ok(table)
}

/// Mean of the given vectors; the zero vector when there are none.
pub(crate) fn mean_of<'a, I>(dimension: usize, vectors: I) -> Vec<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut sum = vec![0.0; dimension];
    let mut n = 0usize;
    for v in vectors {
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
        n += 1;
    }
    if n > 0 {
        let inv = 1.0 / n as f64;
        sum.iter_mut().for_each(|s| *s *= inv);
    }
    sum
}

fn static_mean<'a, I>(table: &EmbeddingTable, tokens: I) -> Vec<f64>
where
    I: IntoIterator<Item = &'a String>,
{
    let normalized: Vec<String> = tokens.into_iter().map(|t| normalize_token(t)).collect();
    mean_of(table.dimension(), normalized.iter().filter_map(|t| table.get(t)))
}

pub(crate) fn report_embedding_fingerprint(
    mode: EmbeddingMode,
    action_oracle: bool,
    table: Option<&EmbeddingTable>,
    contextual_dim: Option<usize>,
) -> Fingerprint {
    let source = match mode {
        EmbeddingMode::Static => table.map(|t| t.digest().to_bytes().to_vec()).unwrap_or_default(),
        _ => contextual_dim.unwrap_or(0).to_le_bytes().to_vec(),
    };
    Fingerprint::of([
        b"report-embedding".as_slice(),
        mode.as_str().as_bytes(),
        &[u8::from(action_oracle)],
        &source,
    ])
}

/// Embed a report by averaging word vectors.
///
/// Static vectors are looked up by normalized token; tokens without a vector
/// are skipped and an empty mean is the zero vector. With the Action oracle,
/// static mode yields `[mean(context) ; mean(action)]` (twice the table
/// dimension) and contextual mode averages the action tokens only.
pub fn embed_report(
    report: &ActivityReport,
    table: Option<&EmbeddingTable>,
    config: &FeatureConfig,
) -> Result<FeatureVector> {
    let oracle = config.action_oracle;
    let span =
        if oracle {
            Some(report.action_span().ok_or_else(|| {
                Error::invalid(report.id(), "action oracle requested but the report has no action span")
            })?)
        } else {
            None
        };
    let (values, contextual_dim) = match config.embedding {
        EmbeddingMode::None => {
            return Err(Error::Config("embedding mode is none".into()));
        }
        EmbeddingMode::Static => {
            let table = table.ok_or_else(|| Error::Config("static embeddings need an embedding table".into()))?;
            let tokens = report.tokens();
            let values = match span {
                None => static_mean(table, tokens),
                Some(span) => {
                    let context = tokens
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| !span.contains(*i))
                        .map(|(_, t)| t);
                    let mut v = static_mean(table, context);
                    v.extend(static_mean(table, &tokens[span.start..span.end]));
                    v
                }
            };
            (values, None)
        }
        EmbeddingMode::ContextualPrecomputed => {
            let vectors = report.contextual_vectors().ok_or_else(|| {
                Error::invalid(
                    report.id(),
                    "contextual embeddings requested but the report has no vectors",
                )
            })?;
            let dim = vectors[0].len();
            let selected = match span {
                None => vectors,
                Some(span) => &vectors[span.start..span.end],
            };
            (mean_of(dim, selected.iter().map(Vec::as_slice)), Some(dim))
        }
    };
    let fp = report_embedding_fingerprint(config.embedding, oracle, table, contextual_dim);
    Ok(FeatureVector::from_parts(values, fp, VectorKind::Embedding))
}

/// Embed a code definition as the mean vector of its normalized words.
///
/// With `extended`, the pooled child definitions are mixed in at half weight:
/// `(v_primary + 0.5 v_children) / 1.5`; a code whose children contribute no
/// embedded word keeps `v_primary`. With `oracle_duplication` the result is
/// repeated to match `[context ; action]` report vectors.
pub fn embed_definition(
    def: &CodeDefinition,
    table: &EmbeddingTable,
    extended: bool,
    oracle_duplication: bool,
) -> Result<FeatureVector> {
    let primary = normalized_words(&def.primary_text());
    if primary.is_empty() {
        return Err(Error::invalid(def.code(), "empty definition after normalization"));
    }
    let dim = table.dimension();
    let mut v = mean_of(dim, primary.iter().filter_map(|w| table.get(w)));
    if extended {
        let pooled: Vec<String> = def.child_texts().iter().flat_map(|t| normalized_words(t)).collect();
        let child_vectors: Vec<&[f64]> = pooled.iter().filter_map(|w| table.get(w)).collect();
        if !child_vectors.is_empty() {
            let ext = mean_of(dim, child_vectors);
            for (x, e) in v.iter_mut().zip(&ext) {
                *x = (*x + 0.5 * e) / 1.5;
            }
        }
    }
    if oracle_duplication {
        v.extend_from_within(..);
    }
    let fp = Fingerprint::of([
        b"definition-embedding".as_slice(),
        &table.digest().to_bytes(),
        &[u8::from(extended), u8::from(oracle_duplication)],
    ]);
    Ok(FeatureVector::from_parts(v, fp, VectorKind::Embedding))
}
