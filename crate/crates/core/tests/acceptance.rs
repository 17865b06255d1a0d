//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run with `cargo test -p icf-core --test acceptance`.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use icf_core::classify::{knn_fit, MlpConfig, MlpModel};
use icf_core::corpus::{
    generate_synthetic, icf_mobility_definitions, icf_mobility_labels, reference_counts, reference_skew, split_folds,
    synthetic_embeddings, ActivityReport, CodeDefinition, CodeDefinitions, Dataset, LabelSet, SynthConfig,
};
use icf_core::eval::{evaluate, paired_bootstrap, run_cv, CvResult, EvalMode, ModelSpec, Resources, SystemConfig};
use icf_core::features::{EmbeddingMode, FeatureConfig, FeatureVector, Fingerprint, UnigramMode, VectorKind};
use icf_core::select::{
    combined_similarity, lesk_preprocess, lesk_select, porter_stem, CodeEmbeddingSet, LeskProfile, ProjectionConfig,
    ProjectionModel,
};

/// Seed of the end-to-end synthetic run.
const E2E_SEED: u64 = 3;
/// Word vector dimension of the end-to-end synthetic run.
const E2E_DIM: usize = 100;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn set(words: &[&str]) -> BTreeSet<String> {
    words.iter().map(|s| s.to_string()).collect()
}

fn lesk_worked_example() -> Outcome {
    let start = Instant::now();
    let labels = LabelSet::new(vec!["d450".into(), "Other".into()], Some("Other")).unwrap();
    let defs = CodeDefinitions::new(
        vec![CodeDefinition::new("d450", "Walking", "Walking: moving along a surface on foot", vec![]).unwrap()],
        &labels,
    )
    .unwrap();
    let report_words = lesk_preprocess("Pt gets to work on foot");
    check(
        report_words == set(&["pt", "get", "work", "foot"]),
        format!("report set {report_words:?}"),
    )?;
    let profile = LeskProfile::build(&defs, false).unwrap();
    let def_words: BTreeSet<String> = profile.words(0).into_iter().map(String::from).collect();
    let printed = set(&["walk", "move", "along", "surface", "foot"]);
    let stemmed_printed: BTreeSet<String> = printed.iter().map(|w| porter_stem(w)).collect();
    check(
        def_words == stemmed_printed,
        format!("definition set {def_words:?} vs printed {printed:?}"),
    )?;
    let differing: Vec<&String> = printed.difference(&def_words).collect();
    let score = profile.scores(&report_words)[0];
    let expected = 1.0 / 20f64.sqrt();
    check(
        (score - expected).abs() <= 1e-9,
        format!("cosine {score} vs {expected}"),
    )?;
    check((score * 10.0).round() / 10.0 == 0.2, "cosine does not round to 0.2")?;
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!(
        "cosine {score:.12} = 1/sqrt(20); sets match, printed {differing:?} is spelled as its Porter stem; {elapsed:?}"
    ))
}

fn random_vec(r: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d)
        .map(|_| r.gen_range(-1.0..1.0) * 10f64.powi(r.gen_range(-3..3)))
        .collect()
}

fn combined_similarity_identity() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let d = r.gen_range(1..=64);
        let a = random_vec(&mut r, d);
        let b = random_vec(&mut r, d);
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        let cos = dot / (na * nb);
        let projection: Vec<f64> = b.iter().map(|y| dot / (nb * nb) * y).collect();
        let np = projection.iter().map(|x| x * x).sum::<f64>().sqrt();
        let two_factor = cos * np / nb;
        let closed = dot * dot.abs() / (na * nb.powi(3));
        let got = combined_similarity(&a, &b).unwrap();
        for reference in [two_factor, closed] {
            let rel = (got - reference).abs() / reference.abs().max(f64::MIN_POSITIVE);
            if got != reference {
                worst = worst.max(rel);
            }
        }
        check(worst <= 1e-12, format!("relative error {worst:e} on dim {d}"))?;
        let same = combined_similarity(&a, &a).unwrap();
        check(same == 1.0, format!("a = b gives {same:e}"))?;
        let mut p = a.clone();
        let mut q = vec![0.0; d + 1];
        p.push(0.0);
        q[d] = r.gen_range(0.5..2.0);
        let perp = combined_similarity(&p, &q).unwrap();
        check(perp == 0.0, format!("orthogonal pair gives {perp:e}"))?;
    }
    Ok(format!(
        "10000 pairs, worst relative error {worst:.2e}; a = b gives 1, orthogonal gives 0"
    ))
}

fn max_rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

fn central_differences(params: &[f64], mut loss: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let h = 1e-5;
    let mut p = params.to_vec();
    (0..params.len())
        .map(|i| {
            p[i] = params[i] + h;
            let up = loss(&p);
            p[i] = params[i] - h;
            let down = loss(&p);
            p[i] = params[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn gradient_checks() -> Outcome {
    let start = Instant::now();
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_mlp, mut worst_proj) = (0.0f64, 0.0f64);
    for trial in 0..20u64 {
        let n = r.gen_range(1..=5);
        let k = r.gen_range(2..=3);
        let d = r.gen_range(1..=8);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| r.gen_range(-1.0..1.0)).collect())
            .collect();
        let xs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let y: Vec<usize> = (0..n).map(|_| r.gen_range(0..k)).collect();

        let config = MlpConfig {
            hidden: r.gen_range(1..=6),
            l2: 1e-2,
            seed: trial,
            ..MlpConfig::default()
        };
        let mut mlp = MlpModel::init(d, k, &config, Fingerprint::default());
        let params = mlp.parameters();
        let (_, grad) = mlp.loss_and_gradient(&xs, &y).unwrap();
        let numeric = central_differences(&params, |p| {
            mlp.set_parameters(p).unwrap();
            mlp.loss(&xs, &y).unwrap()
        });
        worst_mlp = worst_mlp.max(max_rel_error(&grad, &numeric));

        let codes: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..d).map(|_| r.gen_range(-1.0..1.0)).collect())
            .collect();
        let set =
            CodeEmbeddingSet::from_vectors((0..k).collect(), codes, false, false, Fingerprint::default()).unwrap();
        let pconfig = ProjectionConfig {
            hidden_layers: r.gen_range(1..=3),
            seed: trial,
            ..ProjectionConfig::default()
        };
        let mut proj = ProjectionModel::new(d, &set, &pconfig).unwrap();
        let params = proj.parameters();
        let (_, grad) = proj.loss_and_gradient(&xs, &y, &set, true).unwrap();
        let numeric = central_differences(&params, |p| {
            proj.set_parameters(p).unwrap();
            proj.loss(&xs, &y, &set).unwrap()
        });
        worst_proj = worst_proj.max(max_rel_error(&grad, &numeric));
    }
    let elapsed = start.elapsed();
    check(worst_mlp <= 1e-4, format!("MLP relative error {worst_mlp:e}"))?;
    check(worst_proj <= 1e-4, format!("projection relative error {worst_proj:e}"))?;
    check(elapsed < Duration::from_secs(10), format!("took {elapsed:?}"))?;
    Ok(format!(
        "20 toy instances; worst relative error MLP {worst_mlp:.2e}, projection {worst_proj:.2e}; {elapsed:?}"
    ))
}

fn brute_force_knn(points: &[Vec<f64>], labels: &[usize], n_labels: usize, k: usize, q: &[f64]) -> (Vec<usize>, usize) {
    let mut order: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(), i))
        .collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let nearest: Vec<usize> = order[..k].iter().map(|&(_, i)| i).collect();
    let mut votes = vec![0; n_labels];
    for &i in &nearest {
        votes[labels[i]] += 1;
    }
    let top = *votes.iter().max().unwrap();
    (nearest, votes.iter().position(|&v| v == top).unwrap())
}

/// Words made of consonants other than `s` and `y`, which stemming leaves as they are.
fn stable_word(r: &mut ChaCha8Rng) -> String {
    const LETTERS: &[u8] = b"bcdfghjklmnpqrtvwxz";
    (0..r.gen_range(3..=6))
        .map(|_| LETTERS[r.gen_range(0..LETTERS.len())] as char)
        .collect()
}

/// Highest `|R ∩ S| / sqrt(|R| |S|)`, compared exactly through squared
/// integer ratios; earliest code on ties, `fallback` without any overlap.
fn overlap_oracle(report: &BTreeSet<String>, codes: &[BTreeSet<String>], fallback: usize) -> usize {
    let mut best: Option<(usize, usize, usize)> = None;
    for (i, s) in codes.iter().enumerate() {
        let o = report.intersection(s).count();
        if o == 0 {
            continue;
        }
        let better = match best {
            None => true,
            Some((_, bo, bs)) => (o * o) * bs > (bo * bo) * s.len(),
        };
        if better {
            best = Some((i, o, s.len()));
        }
    }
    best.map_or(fallback, |(i, _, _)| i)
}

fn oracle_equivalence() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let mut queries = 0;
    for instance in 0..100 {
        let n = r.gen_range(1..=500);
        let d = r.gen_range(1..=6);
        let n_labels = r.gen_range(2..=5);
        let grid = r.gen_range(2..=6);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| r.gen_range(0..grid) as f64).collect())
            .collect();
        let labels: Vec<usize> = (0..n).map(|_| r.gen_range(0..n_labels)).collect();
        let k = r.gen_range(1..=n.min(15));
        let fv = |v: &[f64]| FeatureVector::new(v.to_vec(), Fingerprint::default(), VectorKind::Embedding).unwrap();
        let x: Vec<FeatureVector> = points.iter().map(|p| fv(p)).collect();
        let model = knn_fit(&x, &labels, n_labels, k).unwrap();
        for _ in 0..20 {
            let q: Vec<f64> = (0..d)
                .map(|_| r.gen_range(0..grid) as f64 + r.gen_range(0..2) as f64 * 0.5)
                .collect();
            let (nearest, pred) = brute_force_knn(&points, &labels, n_labels, k, &q);
            let got = model.neighbors(&fv(&q)).unwrap();
            check(
                got == nearest,
                format!("KNN instance {instance}: neighbors {got:?} vs {nearest:?}"),
            )?;
            let p = model.predict(&fv(&q)).unwrap();
            check(p == pred, format!("KNN instance {instance}: label {p} vs {pred}"))?;
            queries += 1;
        }
    }

    let mut lesk_queries = 0;
    for instance in 0..100 {
        let vocab: Vec<String> = {
            let size = r.gen_range(5..=40);
            let mut v = BTreeSet::new();
            while v.len() < size {
                v.insert(stable_word(&mut r));
            }
            v.into_iter().collect()
        };
        let n_codes = r.gen_range(1..=8);
        let mut codes: Vec<String> = (0..n_codes).map(|i| format!("c{i}")).collect();
        codes.push("Other".into());
        let labels = LabelSet::new(codes.clone(), Some("Other")).unwrap();
        let sets: Vec<BTreeSet<String>> = (0..n_codes)
            .map(|_| {
                let size = r.gen_range(1..=vocab.len().min(6));
                vocab.choose_multiple(&mut r, size).cloned().collect()
            })
            .collect();
        let defs = CodeDefinitions::new(
            sets.iter()
                .enumerate()
                .map(|(i, s)| {
                    let text = s.iter().cloned().collect::<Vec<_>>().join(" ");
                    CodeDefinition::new(codes[i].clone(), "", text, vec![]).unwrap()
                })
                .collect(),
            &labels,
        )
        .unwrap();
        let profile = LeskProfile::build(&defs, false).unwrap();
        let fallback = r.gen_range(0..n_codes);
        for q in 0..20 {
            let len = r.gen_range(1..=8);
            let tokens: Vec<String> = (0..len)
                .map(|_| {
                    if r.gen_bool(0.7) {
                        vocab.choose(&mut r).unwrap().clone()
                    } else {
                        stable_word(&mut r)
                    }
                })
                .collect();
            let words: BTreeSet<String> = tokens.iter().cloned().collect();
            let report = ActivityReport::new(format!("q{q}"), tokens, None, "Other", None).unwrap();
            let expected = overlap_oracle(&words, &sets, fallback);
            let got = lesk_select(&report, &profile, fallback);
            check(
                got == expected,
                format!("Lesk instance {instance}: {got} vs {expected} for {words:?}"),
            )?;
            lesk_queries += 1;
        }
    }
    Ok(format!(
        "KNN: {queries} queries on 100 instances of up to 500 points; Lesk: {lesk_queries} queries on 100 vocabularies; all exact"
    ))
}

fn static_features(oracle: bool) -> Option<FeatureConfig> {
    Some(FeatureConfig {
        unigram: UnigramMode::None,
        embedding: EmbeddingMode::Static,
        action_oracle: oracle,
    })
}

fn system(id: &str, features: Option<FeatureConfig>, spec: &str) -> SystemConfig {
    SystemConfig {
        id: id.into(),
        features,
        grid: vec![serde_json::from_str::<ModelSpec>(spec).unwrap()],
    }
}

fn synthetic(seed: u64, noise: f64, n: usize) -> Dataset {
    let config = SynthConfig {
        noise_rate: noise,
        ..SynthConfig::new(n, reference_skew(), seed)
    };
    generate_synthetic(&icf_mobility_definitions(), &icf_mobility_labels(), &config).unwrap()
}

fn resources(seed: u64, dim: usize) -> Resources {
    let defs = Arc::new(icf_mobility_definitions());
    let table = synthetic_embeddings(&defs, dim, seed).unwrap();
    Resources {
        definitions: Some(defs),
        embeddings: Some(Arc::new(table)),
    }
}

fn other_column(result: &CvResult, dataset: &Dataset) -> usize {
    let report = result.metrics(dataset, EvalMode::AllLabels).unwrap();
    let other = dataset.label_set().other_index().unwrap();
    report.confusion.iter().map(|row| row[other]).sum()
}

struct EndToEnd {
    candidate_runs: Vec<(CvResult, usize)>,
}

fn end_to_end(state: &mut Option<EndToEnd>) -> Outcome {
    let start = Instant::now();
    let res = resources(E2E_SEED, E2E_DIM);
    let clean = synthetic(E2E_SEED, 0.0, 4527);
    check(clean.len() == 4527, format!("{} records", clean.len()))?;
    let counts = clean.label_counts();
    check(counts == reference_counts(), format!("label counts {counts:?}"))?;
    let plan = split_folds(&clean, 10, E2E_SEED).unwrap();

    let svm = run_cv(
        &clean,
        &plan,
        &system("svm", static_features(false), r#"{"model":"svm"}"#),
        &res,
        E2E_SEED,
    )
    .unwrap();
    let proj = run_cv(
        &clean,
        &plan,
        &system("projection", static_features(false), r#"{"model":"projection"}"#),
        &res,
        E2E_SEED,
    )
    .unwrap();
    let svm_f1 = svm.metrics(&clean, EvalMode::AllLabels).unwrap().macro_f1;
    let proj_f1 = proj.metrics(&clean, EvalMode::IcfOnly).unwrap().macro_f1;

    let noisy = synthetic(E2E_SEED, 0.3, 4527);
    let noisy_plan = split_folds(&noisy, 10, E2E_SEED).unwrap();
    let spec = r#"{"model":"svm"}"#;
    let without = run_cv(
        &noisy,
        &noisy_plan,
        &system("svm", static_features(false), spec),
        &res,
        E2E_SEED,
    )
    .unwrap();
    let with = run_cv(
        &noisy,
        &noisy_plan,
        &system("svm_oracle", static_features(true), spec),
        &res,
        E2E_SEED,
    )
    .unwrap();
    let without_f1 = without.metrics(&noisy, EvalMode::AllLabels).unwrap().macro_f1;
    let with_f1 = with.metrics(&noisy, EvalMode::AllLabels).unwrap().macro_f1;

    let (svm_other, proj_other) = (other_column(&svm, &clean), other_column(&proj, &clean));
    let lesk = run_cv(
        &clean,
        &plan,
        &system("lesk", None, r#"{"model":"lesk"}"#),
        &res,
        E2E_SEED,
    )
    .unwrap();
    let cosine = run_cv(
        &clean,
        &plan,
        &system("cosine", static_features(false), r#"{"model":"cosine"}"#),
        &res,
        E2E_SEED,
    )
    .unwrap();
    let n = clean.len();
    *state = Some(EndToEnd {
        candidate_runs: vec![(proj, n), (lesk, n), (cosine, n)],
    });
    let elapsed = start.elapsed();

    let summary = format!(
        "(a) SVM {svm_f1:.4} all labels, projection {proj_f1:.4} defined codes; \
         (b) noise 0.3: oracle {with_f1:.4} vs {without_f1:.4}; \
         (c) Other column projection {proj_other}, SVM {svm_other}; {elapsed:.0?}"
    );
    check(svm_f1 >= 0.95 && proj_f1 >= 0.95, format!("(a) failed: {summary}"))?;
    check(with_f1 >= without_f1, format!("(b) failed: {summary}"))?;
    check(proj_other == 0 && svm_other > 0, format!("(c) failed: {summary}"))?;
    check(elapsed < Duration::from_secs(600), format!("too slow: {summary}"))?;
    Ok(summary)
}

fn bootstrap_checks() -> Outcome {
    let labels = LabelSet::new(vec!["a".into(), "b".into()], None).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(6);
    let gold: Vec<usize> = (0..500).map(|_| r.gen_range(0..2)).collect();
    let pred: Vec<usize> = gold.iter().map(|&g| if r.gen_bool(0.8) { g } else { 1 - g }).collect();
    let other: Vec<usize> = gold.iter().map(|&g| if r.gen_bool(0.75) { g } else { 1 - g }).collect();

    let same = paired_bootstrap(&gold, &pred, &pred, &labels, EvalMode::AllLabels, 1000, 1).unwrap();
    check(same.p_value == 1.0, format!("identical systems p = {}", same.p_value))?;

    let (g2, a2, b2) = ([0usize, 1], [0usize, 1], [0usize, 0]);
    let f1 = |g: &[usize], p: &[usize]| evaluate(g, p, &labels, EvalMode::AllLabels).unwrap().macro_f1;
    let delta = f1(&g2, &a2) - f1(&g2, &b2);
    let mut exceed = 0;
    for i in 0..2 {
        for j in 0..2 {
            let idx = [i, j];
            let g: Vec<usize> = idx.iter().map(|&k| g2[k]).collect();
            let a: Vec<usize> = idx.iter().map(|&k| a2[k]).collect();
            let b: Vec<usize> = idx.iter().map(|&k| b2[k]).collect();
            if f1(&g, &a) - f1(&g, &b) > 2.0 * delta {
                exceed += 1;
            }
        }
    }
    check(
        exceed == 0,
        format!("{exceed} of 4 resamples exceed twice the observed difference"),
    )?;
    let hand = paired_bootstrap(&g2, &a2, &b2, &labels, EvalMode::AllLabels, 1000, 9).unwrap();
    check(hand.p_value == 0.0, format!("two-instance case p = {}", hand.p_value))?;

    let start = Instant::now();
    let first = paired_bootstrap(&gold, &pred, &other, &labels, EvalMode::AllLabels, 1000, 42).unwrap();
    let elapsed = start.elapsed();
    let second = paired_bootstrap(&gold, &pred, &other, &labels, EvalMode::AllLabels, 1000, 42).unwrap();
    check(
        first.p_value.to_bits() == second.p_value.to_bits()
            && first.delta_observed.to_bits() == second.delta_observed.to_bits(),
        "fixed seed gives different results",
    )?;
    check(
        elapsed < Duration::from_secs(5),
        format!("1000 replicates took {elapsed:?}"),
    )?;
    Ok(format!(
        "identical p = 1; two-instance p = 0 (0 of 4 resamples exceed 2·delta); seeded p = {} twice; 1000 replicates for n = 500 in {elapsed:.2?}",
        first.p_value
    ))
}

fn serialize(result: &CvResult, dataset: &Dataset) -> (String, String) {
    let mut csv = String::from("id,gold,pred,fold,system\n");
    for p in &result.predictions {
        csv.push_str(&format!("{},{},{},{},{}\n", p.id, p.gold, p.pred, p.fold, p.system));
    }
    let metrics: Vec<_> = EvalMode::ALL
        .iter()
        .map(|&m| result.metrics(dataset, m).unwrap())
        .collect();
    let json = serde_json::to_string_pretty(&(&result.folds, metrics)).unwrap();
    (csv, json)
}

fn determinism() -> Outcome {
    let seed = 11;
    let dataset = synthetic(seed, 0.1, 1000);
    let res = resources(seed, 32);
    let plan = split_folds(&dataset, 10, seed).unwrap();
    let systems = [
        SystemConfig {
            id: "svm".into(),
            features: static_features(false),
            grid: vec![
                serde_json::from_str(r#"{"model":"svm","epochs":100}"#).unwrap(),
                serde_json::from_str(r#"{"model":"svm","epochs":100,"c":10.0}"#).unwrap(),
            ],
        },
        system(
            "mlp",
            static_features(true),
            r#"{"model":"mlp","hidden":16,"max_epochs":30}"#,
        ),
        system(
            "projection",
            static_features(false),
            r#"{"model":"projection","epochs":3}"#,
        ),
    ];
    let run = |threads: usize| -> Vec<(String, String)> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            systems
                .iter()
                .map(|s| serialize(&run_cv(&dataset, &plan, s, &res, seed).unwrap(), &dataset))
                .collect()
        })
    };
    let a = run(1);
    let b = run(1);
    let c = run(4);
    for (i, s) in systems.iter().enumerate() {
        check(a[i] == b[i], format!("{} differs between identical runs", s.id))?;
        check(a[i] == c[i], format!("{} differs between 1 and 4 threads", s.id))?;
    }
    let bytes: usize = a.iter().map(|(p, m)| p.len() + m.len()).sum();
    Ok(format!(
        "3 systems, 1000 reports: predictions and metrics byte-identical across repeated runs and thread counts ({bytes} bytes)"
    ))
}

fn closed_world(state: &Option<EndToEnd>) -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(8);
    let codes: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..4).map(|_| r.gen_range(-1.0..1.0)).collect())
        .collect();
    let set = CodeEmbeddingSet::from_vectors(vec![0, 1, 2], codes, false, false, Fingerprint::default()).unwrap();
    let acts: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..4).map(|_| r.gen_range(-1.0..1.0)).collect())
        .collect();
    let other_label = 3;
    let train: Vec<(&[f64], usize)> = acts
        .iter()
        .zip([0, 1, other_label, 2])
        .map(|(a, l)| (a.as_slice(), l))
        .collect();
    let rejected = ProjectionModel::fit(&train, &set, &ProjectionConfig::default());
    check(
        rejected.is_err(),
        "projection training accepted an Other-labeled sample",
    )?;
    let accepted = ProjectionModel::fit(&[train[0], train[1], train[3]], &set, &ProjectionConfig::default());
    check(accepted.is_ok(), "projection training rejected defined codes")?;

    let e2e = state.as_ref().ok_or("end-to-end run did not complete")?;
    let mut total = 0;
    for (result, n) in &e2e.candidate_runs {
        check(
            result.predictions.len() == *n,
            format!("{} predicted {} of {n}", result.system, result.predictions.len()),
        )?;
        let others = result.predictions.iter().filter(|p| p.pred == "Other").count();
        check(others == 0, format!("{} predicted Other {others} times", result.system))?;
        total += result.predictions.len();
    }
    Ok(format!(
        "Other-labeled training sample rejected; 0 Other predictions in {total} candidate-selection test predictions (projection, Lesk, cosine)"
    ))
}

fn run(number: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    match &outcome {
        Ok(detail) => println!("criterion {number} PASS  {name}: {detail}"),
        Err(detail) => println!("criterion {number} FAIL  {name}: {detail}"),
    }
    outcome.is_ok()
}

fn main() {
    let mut state = None;
    let results = [
        run(1, "Lesk worked example", lesk_worked_example),
        run(2, "combined-similarity identity", combined_similarity_identity),
        run(3, "gradient checks", gradient_checks),
        run(4, "oracle equivalence", oracle_equivalence),
        run(5, "end-to-end synthetic reproduction", || end_to_end(&mut state)),
        run(6, "bootstrap test", bootstrap_checks),
        run(7, "determinism", determinism),
        run(8, "closed-world and exclusion rules", || closed_world(&state)),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
