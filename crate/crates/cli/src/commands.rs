use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use icf_core::corpus::{
    attach_contextual_vectors, definitions_json, generate_synthetic, icf_mobility_definitions, icf_mobility_labels,
    label_set_json, load_dataset, reference_skew, split_folds, synthetic_embeddings, write_dataset, SynthConfig,
};
use icf_core::eval::{
    bootstrap_test, check_compatible, fit_fold, fit_system, run_cv, CvResult, EvalMode, FoldResult, MetricsReport,
    ModelArtifact, Paradigm, SignificanceResult, TrainedSystem,
};
use icf_core::features::load_embeddings;
use icf_core::util::derive_seed;

use crate::config::{InputFile, Loaded, RunConfig};
use crate::output::{confusion_csv, per_label_csv, predictions_csv, scored_predictions_csv, Artifacts};
use crate::{Computed, Failure, Stage};

const PAIR_STREAM: u64 = 20;

pub struct SynthArgs {
    pub out: PathBuf,
    pub n: usize,
    pub seed: u64,
    pub noise: f64,
    pub dim: usize,
    pub contextual_mix: Option<f64>,
}

fn sample_config(seed: u64) -> String {
    format!(
        r#"seed = {seed}
folds = 10
dataset = "dataset.jsonl"
labels = "labels.json"
definitions = "definitions.json"
embeddings = "embeddings.txt"

[[systems]]
id = "svm_static"
features = {{ unigram = "none", embedding = "static" }}
grid = [{{ model = "svm" }}]

[[systems]]
id = "projection_static"
features = {{ unigram = "none", embedding = "static" }}
grid = [{{ model = "projection" }}]

[[pairs]]
a = "svm_static"
b = "projection_static"
"#
    )
}

/// Synthetic dataset with the ICF mobility labels and definitions, matching
/// word vectors and a runnable sample config.
pub fn synth(args: &SynthArgs) -> Result<(), Failure> {
    let labels = icf_mobility_labels();
    let defs = icf_mobility_definitions();
    let config = SynthConfig {
        noise_rate: args.noise,
        ..SynthConfig::new(args.n, reference_skew(), args.seed)
    };
    let mut dataset = generate_synthetic(&defs, &labels, &config).data("generate")?;
    let table = synthetic_embeddings(&defs, args.dim, args.seed).data("generate")?;
    if let Some(mix) = args.contextual_mix {
        dataset = attach_contextual_vectors(&dataset, &table, mix).data("generate")?;
    }
    let mut out = Artifacts::new(&args.out);
    let mut data = Vec::new();
    write_dataset(&dataset, &mut data).runtime("write")?;
    out.add("dataset.jsonl", data);
    out.add("labels.json", label_set_json(&labels));
    out.add("definitions.json", definitions_json(&defs));
    out.add("embeddings.txt", table.to_word2vec_text().into_bytes());
    out.add("config.toml", sample_config(args.seed).into_bytes());
    let settings = json!({
        "n": args.n,
        "seed": args.seed,
        "noise_rate": args.noise,
        "dimension": args.dim,
        "contextual_mix": args.contextual_mix,
        "skew": config.skew,
        "context_words": config.context_words,
        "action_words": config.action_words,
    });
    out.write("synth", &[], settings).data("write")
}

fn load(config_path: &Path, seed: Option<u64>) -> Result<Loaded, Failure> {
    let mut config = RunConfig::read(config_path).data("config")?;
    if let Some(s) = seed {
        config.seed = s;
    }
    config.load(config_path).data("load inputs")
}

/// Validate a configuration and write its fold plan.
pub fn prep(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let loaded = load(config_path, seed)?;
    let c = &loaded.config;
    let plan = split_folds(&loaded.dataset, c.folds, c.seed).data("folds")?;
    let folds: Vec<_> = plan
        .ids(&loaded.dataset)
        .into_iter()
        .enumerate()
        .map(|(i, (train, dev, test))| json!({ "fold": i, "train": train, "dev": dev, "test": test }))
        .collect();
    let counts: BTreeMap<&str, usize> = loaded
        .labels
        .codes()
        .iter()
        .map(String::as_str)
        .zip(loaded.dataset.label_counts())
        .collect();
    let mut artifacts = Artifacts::new(out);
    artifacts
        .add_json("folds.json", &json!({ "k": plan.k, "seed": plan.seed, "folds": folds }))
        .runtime("write")?;
    artifacts
        .add_json(
            "summary.json",
            &json!({
                "reports": loaded.dataset.len(),
                "label_counts": counts,
                "action_spans": loaded.dataset.has_action_spans(),
                "contextual_vectors": loaded.dataset.has_contextual_vectors(),
            }),
        )
        .runtime("write")?;
    artifacts.write("prep", &loaded.inputs, &loaded.config).data("write")
}

#[derive(Serialize)]
struct SystemMetrics<'a> {
    id: &'a str,
    paradigm: Paradigm,
    modes: BTreeMap<&'static str, &'a MetricsReport>,
    folds: Vec<FoldMetrics<'a>>,
}

#[derive(Serialize)]
struct FoldMetrics<'a> {
    fold: usize,
    selected: usize,
    dev_macro_f1: Option<f64>,
    modes: BTreeMap<&'static str, &'a MetricsReport>,
}

#[derive(Serialize)]
struct PairResult<'a> {
    a: &'a str,
    b: &'a str,
    mode: EvalMode,
    better: &'a str,
    macro_f1_a: f64,
    macro_f1_b: f64,
    #[serde(flatten)]
    test: SignificanceResult,
}

fn fold_report(fold: &FoldResult, mode: EvalMode) -> &MetricsReport {
    match mode {
        EvalMode::AllLabels => &fold.all_labels,
        EvalMode::IcfOnly => &fold.icf_only,
    }
}

/// Cross-validate every configured system and write predictions, metrics,
/// per-label scores, confusion matrices and significance tests.
pub fn cv(config_path: &Path, out: &Path, seed: Option<u64>, mode: Option<EvalMode>) -> Result<(), Failure> {
    let loaded = load(config_path, seed)?;
    let c = &loaded.config;
    let modes: Vec<EvalMode> = match mode {
        Some(m) => vec![m],
        None => c.modes.clone(),
    };
    let plan = split_folds(&loaded.dataset, c.folds, c.seed).data("folds")?;
    let mut results: Vec<CvResult> = Vec::with_capacity(c.systems.len());
    for system in &c.systems {
        let r = run_cv(&loaded.dataset, &plan, system, &loaded.resources, c.seed)
            .computed(&format!("cross-validation of {}", system.id))?;
        results.push(r);
    }
    let mut pooled: Vec<Vec<MetricsReport>> = Vec::with_capacity(results.len());
    for r in &results {
        let reports = modes
            .iter()
            .map(|&m| r.metrics(&loaded.dataset, m))
            .collect::<Result<Vec<_>, _>>()
            .computed("scoring")?;
        pooled.push(reports);
    }
    let mut artifacts = Artifacts::new(out);
    let all_predictions: Vec<_> = results.iter().flat_map(|r| r.predictions.iter().cloned()).collect();
    artifacts.add("predictions.csv", predictions_csv(&all_predictions).runtime("write")?);
    let metrics: Vec<SystemMetrics> = results
        .iter()
        .zip(&pooled)
        .map(|(r, reports)| SystemMetrics {
            id: &r.system,
            paradigm: r.paradigm,
            modes: modes.iter().map(|m| m.as_str()).zip(reports).collect(),
            folds: r
                .folds
                .iter()
                .map(|f| FoldMetrics {
                    fold: f.fold,
                    selected: f.selected,
                    dev_macro_f1: f.dev_macro_f1,
                    modes: modes.iter().map(|&m| (m.as_str(), fold_report(f, m))).collect(),
                })
                .collect(),
        })
        .collect();
    artifacts
        .add_json(
            "metrics.json",
            &json!({ "seed": c.seed, "folds": c.folds, "systems": metrics }),
        )
        .runtime("write")?;
    let rows: Vec<(&str, &MetricsReport)> = results
        .iter()
        .zip(&pooled)
        .flat_map(|(r, reports)| reports.iter().map(move |m| (r.system.as_str(), m)))
        .collect();
    artifacts.add("per_label.csv", per_label_csv(&rows).runtime("write")?);
    for (system, report) in &rows {
        artifacts.add(
            format!("confusion_{system}_{}.csv", report.mode.as_str()),
            confusion_csv(report).runtime("write")?,
        );
    }
    let mut pairs = Vec::new();
    for (i, p) in c.pairs.iter().enumerate() {
        let ia = c.systems.iter().position(|s| s.id == p.a).expect("validated");
        let ib = c.systems.iter().position(|s| s.id == p.b).expect("validated");
        for (k, &m) in modes.iter().enumerate() {
            let (fa, fb) = (pooled[ia][k].macro_f1, pooled[ib][k].macro_f1);
            let (hi, lo) = if fa >= fb { (ia, ib) } else { (ib, ia) };
            let test = bootstrap_test(
                &results[hi].predictions,
                &results[lo].predictions,
                &loaded.labels,
                m,
                c.replicates,
                derive_seed(c.seed, PAIR_STREAM, i as u64),
            )
            .computed("significance")?;
            pairs.push(PairResult {
                a: &p.a,
                b: &p.b,
                mode: m,
                better: &c.systems[hi].id,
                macro_f1_a: fa,
                macro_f1_b: fb,
                test,
            });
        }
    }
    artifacts.add_json("significance.json", &pairs).runtime("write")?;
    let settings = json!({ "config": c, "modes": modes });
    artifacts.write("cv", &loaded.inputs, settings).data("write")
}

/// Fit one system, on all reports or on one fold's training split, and save it.
pub fn train(
    config_path: &Path,
    system_id: &str,
    out: &Path,
    fold: Option<usize>,
    seed: Option<u64>,
) -> Result<(), Failure> {
    let loaded = load(config_path, seed)?;
    let c = &loaded.config;
    let system = c.system(system_id).usage("select system")?;
    let (trained, selected): (TrainedSystem, usize) = match fold {
        Some(f) => {
            let plan = split_folds(&loaded.dataset, c.folds, c.seed).data("folds")?;
            let fit = fit_fold(&loaded.dataset, &plan, f, system, &loaded.resources, c.seed).computed("training")?;
            (fit.system, fit.selected)
        }
        None => {
            if system.grid.len() != 1 {
                return Err(Failure::usage(
                    "training",
                    format!(
                        "system {system_id:?} has {} grid entries; pass --fold to choose one on that fold's development split",
                        system.grid.len()
                    ),
                ));
            }
            let all: Vec<usize> = (0..loaded.dataset.len()).collect();
            let t = fit_system(
                system,
                &system.grid[0],
                &loaded.dataset,
                &all,
                &loaded.resources,
                c.seed,
            )
            .computed("training")?;
            (t, 0)
        }
    };
    let mut artifacts = Artifacts::new(out);
    let json = trained.to_artifact().to_json().runtime("serialize model")?;
    artifacts.add("model.json", json.into_bytes());
    let settings = json!({ "system": system, "fold": fold, "seed": c.seed, "folds": c.folds, "selected": selected });
    artifacts.write("train", &loaded.inputs, settings).data("write")
}

/// Label a dataset with a saved model.
pub fn predict(
    model_path: &Path,
    dataset_path: &Path,
    embeddings: Option<&Path>,
    out: &Path,
    scores: bool,
) -> Result<(), Failure> {
    let text = std::fs::read_to_string(model_path)
        .map_err(|e| Failure::data("load model", format!("{}: {e}", model_path.display())))?;
    let artifact = ModelArtifact::from_json(&text).data("load model")?;
    let table = match embeddings {
        Some(p) => Some(Arc::new(load_embeddings(p).data("load embeddings")?)),
        None => None,
    };
    let system = artifact.into_system(table).data("load model")?;
    if scores && system.paradigm() == Paradigm::Classification {
        return Err(Failure::usage(
            "predict",
            format!("scores unavailable: {} is a classification model", system.spec().name()),
        ));
    }
    let dataset = load_dataset(dataset_path, system.label_set()).data("load dataset")?;
    check_compatible(&system, &dataset).data("load dataset")?;
    let labels = system.label_set();
    let candidates = if scores {
        Some(system.candidate_labels().usage("predict")?.to_vec())
    } else {
        None
    };
    let mut rows = Vec::with_capacity(dataset.len());
    for report in dataset.reports() {
        let pred = system.predict(report).computed("predict")?;
        let s = if scores {
            Some(system.scores(report).computed("predict")?)
        } else {
            None
        };
        rows.push((
            report.id().to_string(),
            report.gold_label().to_string(),
            labels.code(pred).to_string(),
            s,
        ));
    }
    let mut inputs = vec![
        InputFile::hash("model", model_path, model_path).data("hash inputs")?,
        InputFile::hash("dataset", dataset_path, dataset_path).data("hash inputs")?,
    ];
    if let Some(p) = embeddings {
        inputs.push(InputFile::hash("embeddings", p, p).data("hash inputs")?);
    }
    let mut artifacts = Artifacts::new(out);
    artifacts.add(
        "predictions.csv",
        scored_predictions_csv(&rows, labels, candidates.as_deref()).runtime("write")?,
    );
    artifacts
        .write("predict", &inputs, json!({ "system": system.id(), "scores": scores }))
        .data("write")
}

/// Plain-text tables from a `cv` output directory.
pub fn report(input: &Path, mode: Option<EvalMode>, out: Option<&Path>) -> Result<(), Failure> {
    let path = input.join("metrics.json");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::data("read metrics", format!("{}: {e}", path.display())))?;
    let metrics: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::data("read metrics", format!("{}: {e}", path.display())))?;
    let systems = metrics["systems"]
        .as_array()
        .ok_or_else(|| Failure::data("read metrics", "metrics.json has no systems".to_string()))?;
    let mut lines = Vec::new();
    let modes: Vec<&str> = match mode {
        Some(m) => vec![m.as_str()],
        None => EvalMode::ALL.iter().map(|m| m.as_str()).collect(),
    };
    for m in modes {
        let reports: Vec<(&str, MetricsReport)> = systems
            .iter()
            .filter_map(|s| {
                let r = serde_json::from_value(s["modes"][m].clone()).ok()?;
                Some((s["id"].as_str().unwrap_or("?"), r))
            })
            .collect();
        if reports.is_empty() {
            continue;
        }
        lines.push(format!("== {m} =="));
        lines.push(format!("{:<24} {:>9}", "system", "macro-F1"));
        for (id, r) in &reports {
            lines.push(format!("{id:<24} {:>9.4}", r.macro_f1));
        }
        lines.push(String::new());
        let mut header = format!("{:<8} {:>7}", "label", "support");
        for (id, _) in &reports {
            header.push_str(&format!(" {:>12}", truncate(id, 12)));
        }
        lines.push(header);
        for (i, l) in reports[0].1.per_label.iter().enumerate() {
            let mut row = format!("{:<8} {:>7}", l.label, l.support);
            for (_, r) in &reports {
                row.push_str(&format!(" {:>12.4}", r.per_label[i].f1));
            }
            lines.push(row);
        }
        lines.push(String::new());
    }
    let sig_path = input.join("significance.json");
    if let Ok(text) = std::fs::read_to_string(&sig_path) {
        let pairs: Vec<serde_json::Value> = serde_json::from_str(&text)
            .map_err(|e| Failure::data("read significance", format!("{}: {e}", sig_path.display())))?;
        if !pairs.is_empty() {
            lines.push("== significance ==".into());
            for p in pairs {
                if mode.is_some_and(|m| p["mode"].as_str() != Some(m.as_str())) {
                    continue;
                }
                lines.push(format!(
                    "{} vs {} [{}]: better {}, delta {:.4}, p {}",
                    p["a"].as_str().unwrap_or("?"),
                    p["b"].as_str().unwrap_or("?"),
                    p["mode"].as_str().unwrap_or("?"),
                    p["better"].as_str().unwrap_or("?"),
                    p["delta_observed"].as_f64().unwrap_or(f64::NAN),
                    p["p_value"].as_f64().unwrap_or(f64::NAN),
                ));
            }
        }
    }
    let text = lines.join("\n") + "\n";
    print!("{text}");
    if let Some(path) = out {
        icf_core::util::write_atomic(path, text.as_bytes()).data("write")?;
    }
    Ok(())
}

fn truncate(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}
