use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use icf_core::corpus::{load_dataset, load_definitions, load_label_set, CodeDefinitions, Dataset, LabelSet};
use icf_core::eval::{EvalMode, Resources, SystemConfig, DEFAULT_REPLICATES};
use icf_core::features::{load_embeddings, EmbeddingTable};
use icf_core::util::sha256_file;

fn default_modes() -> Vec<EvalMode> {
    EvalMode::ALL.to_vec()
}

fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}

/// Two systems compared with the paired bootstrap test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pairing {
    pub a: String,
    pub b: String,
}

/// Experiment description read from a TOML file. `seed`, `folds`, `dataset`,
/// `labels` and `systems` are required; relative paths are resolved against
/// the directory of the file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub folds: usize,
    pub dataset: PathBuf,
    pub labels: PathBuf,
    #[serde(default)]
    pub definitions: Option<PathBuf>,
    #[serde(default)]
    pub embeddings: Option<PathBuf>,
    #[serde(default = "default_modes")]
    pub modes: Vec<EvalMode>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub pairs: Vec<Pairing>,
    pub systems: Vec<SystemConfig>,
}

/// An input file with its content hash, as recorded in manifests.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InputFile {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

impl InputFile {
    pub fn hash(role: &str, display: &Path, path: &Path) -> Result<Self> {
        Ok(InputFile {
            role: role.to_string(),
            path: display.display().to_string(),
            sha256: sha256_file(path)?,
        })
    }
}

/// A validated configuration with every referenced file loaded.
pub struct Loaded {
    pub config: RunConfig,
    pub labels: LabelSet,
    pub dataset: Dataset,
    pub resources: Resources,
    pub inputs: Vec<InputFile>,
}

impl RunConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let config: RunConfig = toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.systems.is_empty() {
            bail!("config lists no systems");
        }
        if self.modes.is_empty() {
            bail!("config lists no evaluation modes");
        }
        if self.replicates == 0 {
            bail!("replicates must be at least 1");
        }
        let mut ids = HashSet::new();
        for s in &self.systems {
            if !ids.insert(s.id.as_str()) {
                bail!("system id {:?} is used twice", s.id);
            }
            if s.grid.is_empty() {
                bail!("system {:?} has an empty grid", s.id);
            }
        }
        for p in &self.pairs {
            for id in [&p.a, &p.b] {
                if !ids.contains(id.as_str()) {
                    bail!("pairing names unknown system {id:?}");
                }
            }
        }
        Ok(())
    }

    pub fn system(&self, id: &str) -> Result<&SystemConfig> {
        self.systems
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| anyhow!("config has no system {id:?}"))
    }

    /// Load every file the configuration names, resolving relative paths
    /// against `base`.
    pub fn load(self, config_path: &Path) -> Result<Loaded> {
        let base = config_path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &Path| -> PathBuf { base.join(p) };
        let existing = |role: &str, p: &Path| -> Result<PathBuf> {
            let full = resolve(p);
            if !full.is_file() {
                bail!("{role} file {} does not exist", full.display());
            }
            Ok(full)
        };
        let mut inputs = vec![InputFile::hash("config", config_path, config_path)?];
        let labels_path = existing("labels", &self.labels)?;
        let labels = load_label_set(&labels_path)?;
        inputs.push(InputFile::hash("labels", &self.labels, &labels_path)?);
        let dataset_path = existing("dataset", &self.dataset)?;
        let dataset = load_dataset(&dataset_path, &labels)?;
        inputs.push(InputFile::hash("dataset", &self.dataset, &dataset_path)?);
        let definitions: Option<Arc<CodeDefinitions>> = match &self.definitions {
            None => None,
            Some(p) => {
                let full = existing("definitions", p)?;
                let defs = load_definitions(&full, &labels)?;
                inputs.push(InputFile::hash("definitions", p, &full)?);
                Some(Arc::new(defs))
            }
        };
        let embeddings: Option<Arc<EmbeddingTable>> = match &self.embeddings {
            None => None,
            Some(p) => {
                let full = existing("embeddings", p)?;
                let table = load_embeddings(&full)?;
                inputs.push(InputFile::hash("embeddings", p, &full)?);
                Some(Arc::new(table))
            }
        };
        let resources = Resources {
            definitions,
            embeddings,
        };
        for s in &self.systems {
            s.validate(&dataset, &resources)?;
        }
        Ok(Loaded {
            config: self,
            labels,
            dataset,
            resources,
            inputs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 3
folds = 10
dataset = "d.jsonl"
labels = "l.json"

[[systems]]
id = "svm"
features = { unigram = "tfidf", embedding = "none" }
grid = [{ model = "svm" }, { model = "svm", c = 10.0 }]
"#;

    #[test]
    fn parses_with_documented_defaults() {
        let c: RunConfig = toml::from_str(MINIMAL).unwrap();
        c.validate().unwrap();
        assert_eq!(c.modes, EvalMode::ALL.to_vec());
        assert_eq!(c.replicates, 1000);
        assert_eq!(c.systems[0].grid.len(), 2);
    }

    #[test]
    fn required_keys_are_not_defaulted() {
        for key in ["seed", "folds", "dataset", "labels"] {
            let text: String = MINIMAL
                .lines()
                .filter(|l| !l.starts_with(&format!("{key} =")))
                .collect::<Vec<_>>()
                .join("\n");
            let err = toml::from_str::<RunConfig>(&text).unwrap_err().to_string();
            assert!(err.contains(key), "{err}");
        }
        assert!(toml::from_str::<RunConfig>("seed = 1\nfolds = 3\ndataset = \"d\"\nlabels = \"l\"").is_err());
        assert!(toml::from_str::<RunConfig>(&format!("{MINIMAL}\nunknown = 1")).is_err());
    }

    #[test]
    fn duplicate_ids_and_unknown_pairings_are_rejected() {
        let dup = format!("{MINIMAL}\n[[systems]]\nid = \"svm\"\ngrid = [{{ model = \"lesk\" }}]\n");
        assert!(toml::from_str::<RunConfig>(&dup).unwrap().validate().is_err());
        let pair = MINIMAL.replace("[[systems]]", "[[pairs]]\na = \"svm\"\nb = \"knn\"\n\n[[systems]]");
        assert!(toml::from_str::<RunConfig>(&pair).unwrap().validate().is_err());
    }
}
