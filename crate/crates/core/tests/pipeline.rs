use std::sync::Arc;

use icf_core::corpus::{
    attach_contextual_vectors, generate_synthetic, icf_mobility_definitions, icf_mobility_labels, load_dataset,
    reference_skew, save_dataset, split_folds, synthetic_embeddings, Dataset, SynthConfig,
};
use icf_core::eval::{
    evaluate, fit_fold, fit_system, run_cv, EvalMode, ModelArtifact, ModelSpec, Paradigm, Resources, SystemConfig,
};
use icf_core::features::{EmbeddingMode, FeatureConfig, UnigramMode};

fn dataset(n: usize, seed: u64, noise: f64) -> Dataset {
    let config = SynthConfig {
        noise_rate: noise,
        ..SynthConfig::new(n, reference_skew(), seed)
    };
    generate_synthetic(&icf_mobility_definitions(), &icf_mobility_labels(), &config).unwrap()
}

fn resources(dim: usize, seed: u64) -> Resources {
    let defs = Arc::new(icf_mobility_definitions());
    let table = synthetic_embeddings(&defs, dim, seed).unwrap();
    Resources {
        definitions: Some(defs),
        embeddings: Some(Arc::new(table)),
    }
}

fn features(unigram: UnigramMode, embedding: EmbeddingMode, oracle: bool) -> Option<FeatureConfig> {
    Some(FeatureConfig {
        unigram,
        embedding,
        action_oracle: oracle,
    })
}

fn spec(json: &str) -> ModelSpec {
    serde_json::from_str(json).unwrap()
}

fn system(id: &str, features: Option<FeatureConfig>, grid: &[&str]) -> SystemConfig {
    SystemConfig {
        id: id.into(),
        features,
        grid: grid.iter().map(|g| spec(g)).collect(),
    }
}

#[test]
fn tfidf_svm_learns_trigger_words() {
    let ds = dataset(1500, 1, 0.0);
    let plan = split_folds(&ds, 5, 1).unwrap();
    let sys = system(
        "svm",
        features(UnigramMode::Tfidf, EmbeddingMode::None, false),
        &[r#"{"model":"svm","epochs":200}"#],
    );
    let cv = run_cv(&ds, &plan, &sys, &Resources::default(), 1).unwrap();
    assert_eq!(cv.paradigm, Paradigm::Classification);
    assert_eq!(cv.predictions.len(), ds.len());
    let f1 = cv.metrics(&ds, EvalMode::IcfOnly).unwrap().macro_f1;
    let all = cv.metrics(&ds, EvalMode::AllLabels).unwrap();
    assert!(all.macro_f1 > 0.85, "{}", all.macro_f1);
    assert!(f1 > 0.85, "{f1}");
    let pooled: usize = cv
        .folds
        .iter()
        .map(|f| f.all_labels.per_label.iter().map(|l| l.support).sum::<usize>())
        .sum();
    assert_eq!(pooled, ds.len());
}

#[test]
fn each_test_report_is_predicted_once() {
    let ds = dataset(400, 2, 0.1);
    let plan = split_folds(&ds, 4, 2).unwrap();
    let sys = system(
        "knn",
        features(UnigramMode::Binary, EmbeddingMode::None, false),
        &[r#"{"model":"knn","k":3}"#],
    );
    let cv = run_cv(&ds, &plan, &sys, &Resources::default(), 2).unwrap();
    let mut ids: Vec<&str> = cv.predictions.iter().map(|p| p.id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    assert_eq!(ids.len(), ds.len());
    for fold in &cv.folds {
        assert!(fold.dev_macro_f1.is_none());
        assert_eq!(fold.selected, 0);
    }
}

#[test]
fn grid_selection_keeps_the_best_dev_entry_and_the_earliest_on_ties() {
    let ds = dataset(600, 3, 0.0);
    let res = resources(16, 3);
    let plan = split_folds(&ds, 5, 3).unwrap();
    let feats = features(UnigramMode::Binary, EmbeddingMode::None, false);
    let weak = r#"{"model":"knn","k":200}"#;
    let strong = r#"{"model":"svm","epochs":100}"#;
    let fit = fit_fold(&ds, &plan, 0, &system("g", feats, &[weak, strong]), &res, 3).unwrap();
    assert_eq!(fit.selected, 1);

    let dev_score = |json: &str| {
        let only = fit_fold(&ds, &plan, 0, &system("g", feats, &[json, json]), &res, 3).unwrap();
        assert_eq!(only.selected, 0);
        only.dev_macro_f1.unwrap()
    };
    let (w, s) = (dev_score(weak), dev_score(strong));
    assert!(s > w);
    assert_eq!(fit.dev_macro_f1, Some(s));
}

#[test]
fn saved_models_predict_like_the_originals() {
    let ds = dataset(500, 4, 0.1);
    let ds = attach_contextual_vectors(&ds, resources(12, 4).embeddings.as_deref().unwrap(), 0.5).unwrap();
    let res = resources(12, 4);
    let train: Vec<usize> = (0..400).collect();
    let systems = [
        system(
            "knn",
            features(UnigramMode::Tfidf, EmbeddingMode::Static, false),
            &[r#"{"model":"knn"}"#],
        ),
        system(
            "svm",
            features(UnigramMode::None, EmbeddingMode::Static, true),
            &[r#"{"model":"svm","epochs":20}"#],
        ),
        system(
            "mlp",
            features(UnigramMode::None, EmbeddingMode::ContextualPrecomputed, false),
            &[r#"{"model":"mlp","hidden":8,"max_epochs":20}"#],
        ),
        system("lesk", None, &[r#"{"model":"lesk","extended":true}"#]),
        system(
            "cosine",
            features(UnigramMode::None, EmbeddingMode::Static, false),
            &[r#"{"model":"cosine"}"#],
        ),
        system(
            "projection",
            features(UnigramMode::None, EmbeddingMode::Static, false),
            &[r#"{"model":"projection","epochs":2}"#],
        ),
    ];
    for sys in &systems {
        let trained = fit_system(sys, &sys.grid[0], &ds, &train, &res, 9).unwrap();
        let json = trained.to_artifact().to_json().unwrap();
        let loaded = ModelArtifact::from_json(&json)
            .unwrap()
            .into_system(res.embeddings.clone())
            .unwrap();
        for report in &ds.reports()[400..] {
            assert_eq!(
                trained.predict(report).unwrap(),
                loaded.predict(report).unwrap(),
                "{}",
                sys.id
            );
        }
        assert_eq!(loaded.to_artifact().to_json().unwrap(), json, "{}", sys.id);
    }
}

#[test]
fn saved_models_check_their_word_vectors() {
    let ds = dataset(200, 5, 0.0);
    let res = resources(8, 5);
    let sys = system(
        "cosine",
        features(UnigramMode::None, EmbeddingMode::Static, false),
        &[r#"{"model":"cosine"}"#],
    );
    let trained = fit_system(&sys, &sys.grid[0], &ds, &(0..200).collect::<Vec<_>>(), &res, 0).unwrap();
    let artifact = ModelArtifact::from_json(&trained.to_artifact().to_json().unwrap()).unwrap();
    assert!(artifact.clone().into_system(None).is_err());
    let other = resources(8, 6).embeddings;
    assert!(artifact.into_system(other).is_err());
}

#[test]
fn inconsistent_systems_are_rejected() {
    let ds = dataset(100, 6, 0.0);
    let res = resources(8, 6);
    let st = features(UnigramMode::None, EmbeddingMode::Static, false);
    let bad = [
        system("mixed", st, &[r#"{"model":"svm"}"#, r#"{"model":"cosine"}"#]),
        system("lesk_features", st, &[r#"{"model":"lesk"}"#]),
        system(
            "cosine_tfidf",
            features(UnigramMode::Tfidf, EmbeddingMode::None, false),
            &[r#"{"model":"cosine"}"#],
        ),
        system("no_features", None, &[r#"{"model":"svm"}"#]),
        system("empty", st, &[]),
        system("layers", st, &[r#"{"model":"projection","hidden_layers":11}"#]),
        system(
            "contextual",
            features(UnigramMode::None, EmbeddingMode::ContextualPrecomputed, false),
            &[r#"{"model":"svm"}"#],
        ),
    ];
    for sys in &bad {
        assert!(sys.validate(&ds, &res).is_err(), "{}", sys.id);
    }
    let no_table = Resources {
        definitions: res.definitions.clone(),
        embeddings: None,
    };
    assert!(system("cos", st, &[r#"{"model":"cosine"}"#])
        .validate(&ds, &no_table)
        .is_err());
    assert!(serde_json::from_str::<ModelSpec>(r#"{"model":"svm","gamma":1}"#).is_err());
}

#[test]
fn datasets_survive_a_file_round_trip_and_score_identically() {
    let ds = dataset(300, 7, 0.2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.jsonl");
    save_dataset(&ds, &path).unwrap();
    let back = load_dataset(&path, ds.label_set()).unwrap();
    assert_eq!(back.reports(), ds.reports());
    let gold = back.gold_indices();
    let report = evaluate(&gold, &gold, back.label_set(), EvalMode::AllLabels).unwrap();
    let present = back.label_counts().iter().filter(|&&c| c > 0).count();
    let expected = present as f64 / back.label_set().len() as f64;
    assert!((report.macro_f1 - expected).abs() < 1e-12);
}
