//! End-to-end checks of the command layer: file schemas, determinism, and
//! the simulate -> train -> eval composition over real directories.

use std::fs;
use std::path::Path;

use sybilscatter::cli::{cmd_eval, cmd_simulate, cmd_sweep, cmd_train, read_dataset_csv};
use sybilscatter::{AttackMode, Error, ForestModel, ForestParams, ScenarioConfig};

fn small_office(num_slots: usize, mode: AttackMode) -> ScenarioConfig {
    ScenarioConfig {
        num_slots,
        attack_mode: mode,
        ..ScenarioConfig::office()
    }
}

fn write_config(dir: &Path, name: &str, config: &ScenarioConfig) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(String::from)
        .collect()
}

#[test]
fn simulate_writes_dataset_with_feature_columns_plus_label() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "office.json", &small_office(20, AttackMode::Basic));
    let out = tmp.path().join("run");
    let manifest = cmd_simulate(Some(&config), None, &out, false).unwrap();

    let rows = lines(&manifest.output_path("dataset.csv"));
    // profile length 10 -> 10 feature columns + label
    assert_eq!(rows[0], "f0,f1,f2,f3,f4,f5,f6,f7,f8,f9,label");
    assert_eq!(rows.len(), 1 + 12); // 2 windows x 6 IDs
    for row in &rows[1..] {
        assert_eq!(row.split(',').count(), 11);
        let label = row.rsplit(',').next().unwrap();
        assert!(label == "0" || label == "1");
    }
    assert!(manifest.output_path("signatures.csv").exists());
    assert!(manifest.output_path("manifest.json").exists());
    assert!(!manifest.output_path("traces.csv").exists());
}

#[test]
fn simulate_defaults_to_office_preset_without_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let manifest = cmd_simulate(None, Some(3), &out, false).unwrap();
    assert_eq!(manifest.seed, 3);
    let rows = lines(&manifest.output_path("dataset.csv"));
    assert_eq!(rows[0].split(',').count(), 11);
    // office: 60 slots -> 6 windows x 6 IDs
    assert_eq!(rows.len(), 1 + 36);
}

#[test]
fn simulate_twice_produces_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "c.json", &small_office(20, AttackMode::PowerScaling));
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    cmd_simulate(Some(&config), Some(7), &out_a, false).unwrap();
    cmd_simulate(Some(&config), Some(7), &out_b, false).unwrap();
    for name in ["dataset.csv", "provenance.csv", "signatures.csv"] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn colluding_scenario_is_marked_corpus_b_in_provenance() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "c.json", &small_office(20, AttackMode::Colluding));
    let out = tmp.path().join("run");
    let manifest = cmd_simulate(Some(&config), None, &out, false).unwrap();
    let rows = lines(&manifest.output_path("provenance.csv"));
    assert_eq!(rows[0], "run,attack_mode,scenario_seed,corpus,window,claimed_id");
    assert!(rows.len() > 1);
    for row in &rows[1..] {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[1], "colluding");
        assert_eq!(fields[3], "B");
    }
}

#[test]
fn dump_traces_writes_per_sample_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = small_office(2, AttackMode::Basic);
    config.num_fake_ids = 1;
    config.num_attackers = 1;
    let path = write_config(tmp.path(), "c.json", &config);
    let out = tmp.path().join("run");
    let manifest = cmd_simulate(Some(&path), None, &out, true).unwrap();
    let rows = lines(&manifest.output_path("traces.csv"));
    assert_eq!(rows[0], "slot,claimed_id,sample_index,value");
    // every trace has at least the modulated span plus padding
    assert!(rows.len() > 2 * 3 * 64 * 50);
    assert!(manifest.outputs.contains(&"traces.csv".to_string()));
}

#[test]
fn invalid_config_fails_with_field_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = small_office(10, AttackMode::Basic);
    config.tag_gain = -1.0;
    let path = write_config(tmp.path(), "bad.json", &config);
    let err = cmd_simulate(Some(&path), None, &tmp.path().join("run"), false).unwrap_err();
    assert!(err.to_string().contains("tag_gain"), "{err}");
}

#[test]
fn train_writes_model_with_expected_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "c.json", &small_office(30, AttackMode::Basic));
    let sim = cmd_simulate(Some(&config), None, &tmp.path().join("sim"), false).unwrap();
    let train = cmd_train(
        &sim.output_path("dataset.csv"),
        &ForestParams::default(),
        &tmp.path().join("train"),
    )
    .unwrap();
    let text = fs::read_to_string(train.output_path("model.json")).unwrap();
    let model = ForestModel::from_text(&text).unwrap();
    assert_eq!(model.num_trees, 30);
    assert_eq!(model.num_features, 10);
    assert_eq!(model.features_per_split, 3); // floor(log2 10)
    assert!(model.sort_enabled);
    // loading and re-serializing reproduces the file byte for byte
    assert_eq!(model.to_text(), text);
}

#[test]
fn single_tree_model_works_in_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "c.json", &small_office(30, AttackMode::Basic));
    let sim = cmd_simulate(Some(&config), None, &tmp.path().join("sim"), false).unwrap();
    let dataset = sim.output_path("dataset.csv");
    let params = ForestParams {
        num_trees: 1,
        ..ForestParams::default()
    };
    let train = cmd_train(&dataset, &params, &tmp.path().join("train")).unwrap();
    let eval = cmd_eval(
        &train.output_path("model.json"),
        &dataset,
        &tmp.path().join("eval"),
    )
    .unwrap();
    let metrics = fs::read_to_string(eval.output_path("metrics.json")).unwrap();
    let report: sybilscatter::MetricsReport = serde_json::from_str(&metrics).unwrap();
    // a lone tree votes 0 or 1, so the curve has at most the two extremes
    assert!(report.roc.len() >= 2);
}

#[test]
fn perfectly_separable_dataset_scores_accuracy_one() {
    let tmp = tempfile::tempdir().unwrap();
    let mut csv = String::from("f0,f1,label\n");
    for i in 0..12 {
        csv.push_str(&format!("0.1{i:02},0.2,1\n"));
        csv.push_str(&format!("0.8{i:02},0.9,0\n"));
    }
    let dataset = tmp.path().join("toy.csv");
    fs::write(&dataset, csv).unwrap();
    let train = cmd_train(&dataset, &ForestParams::default(), &tmp.path().join("t")).unwrap();
    let eval = cmd_eval(
        &train.output_path("model.json"),
        &dataset,
        &tmp.path().join("e"),
    )
    .unwrap();
    let report: sybilscatter::MetricsReport =
        serde_json::from_str(&fs::read_to_string(eval.output_path("metrics.json")).unwrap())
            .unwrap();
    assert_eq!(report.accuracy, 1.0);
    assert_eq!(report.auroc, Some(1.0));
    // ROC files are part of every eval
    let roc = lines(&eval.output_path("roc.csv"));
    assert_eq!(roc[0], "fpr,tpr");
    assert_eq!(roc.last().unwrap(), "1.000000,1.000000");
}

#[test]
fn colluding_dataset_evaluates_on_a_model_trained_elsewhere() {
    let tmp = tempfile::tempdir().unwrap();
    // train on a basic-attack run (corpus A), evaluate on colluding (corpus B)
    let config_a = write_config(tmp.path(), "a.json", &small_office(30, AttackMode::Basic));
    let config_b = write_config(tmp.path(), "b.json", &small_office(30, AttackMode::Colluding));
    let sim_a = cmd_simulate(Some(&config_a), Some(1), &tmp.path().join("sa"), false).unwrap();
    let sim_b = cmd_simulate(Some(&config_b), Some(2), &tmp.path().join("sb"), false).unwrap();
    let train = cmd_train(
        &sim_a.output_path("dataset.csv"),
        &ForestParams::default(),
        &tmp.path().join("t"),
    )
    .unwrap();
    let eval = cmd_eval(
        &train.output_path("model.json"),
        &sim_b.output_path("dataset.csv"),
        &tmp.path().join("e"),
    )
    .unwrap();
    assert!(eval.output_path("metrics.json").exists());
    assert!(eval.output_path("predictions.csv").exists());
    let preds = lines(&eval.output_path("predictions.csv"));
    assert_eq!(preds[0], "index,score,prediction,label");
    assert_eq!(preds.len(), 1 + 18); // 3 windows x 6 IDs
}

#[test]
fn eval_rejects_width_mismatch_naming_both_sizes() {
    let tmp = tempfile::tempdir().unwrap();
    let mut csv = String::from("f0,f1,f2,label\n");
    for i in 0..8 {
        csv.push_str(&format!("0.{i},0.2,0.3,{}\n", i % 2));
    }
    let d3 = tmp.path().join("d3.csv");
    fs::write(&d3, csv).unwrap();
    let train = cmd_train(&d3, &ForestParams::default(), &tmp.path().join("t")).unwrap();

    let mut csv2 = String::from("f0,f1,label\n");
    for i in 0..8 {
        csv2.push_str(&format!("0.{i},0.2,{}\n", i % 2));
    }
    let d2 = tmp.path().join("d2.csv");
    fs::write(&d2, csv2).unwrap();
    match cmd_eval(&train.output_path("model.json"), &d2, &tmp.path().join("e")) {
        Err(Error::FeatureWidthMismatch {
            expected: 3,
            got: 2,
        }) => {}
        other => panic!("expected width mismatch, got {other:?}"),
    }
}

#[test]
fn train_rejects_single_class_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = tmp.path().join("one.csv");
    fs::write(&dataset, "f0,label\n0.1,1\n0.2,1\n").unwrap();
    match cmd_train(&dataset, &ForestParams::default(), &tmp.path().join("t")) {
        Err(Error::SingleClass(1)) => {}
        other => panic!("expected SingleClass, got {other:?}"),
    }
}

#[test]
fn sweep_specs_emit_expected_row_counts() {
    let tmp = tempfile::tempdir().unwrap();
    // default axes, corpus sizes cut down for test speed
    let cases = [
        (
            "profile_size",
            r#"{"sweep": "profile_size", "runs": 1, "num_slots": 48}"#,
            45,
        ),
        (
            "distance_metric",
            r#"{"sweep": "distance_metric", "runs": 2, "num_slots": 20, "profile_len": 5}"#,
            8,
        ),
        (
            "trees",
            r#"{"sweep": "trees", "train_runs": 2, "test_runs": 1, "num_slots": 20, "profile_len": 5}"#,
            20,
        ),
    ];
    for (name, spec, expected_rows) in cases {
        let spec_path = tmp.path().join(format!("{name}.json"));
        fs::write(&spec_path, spec).unwrap();
        let out = tmp.path().join(name);
        let manifest = cmd_sweep(&spec_path, None, 5, &out).unwrap();
        let rows = lines(&manifest.output_path("results.csv"));
        assert_eq!(rows.len(), 1 + expected_rows, "{name} row count");
        assert!(manifest.output_path("results.json").exists());
    }
    // the tree sweep carries per-cell ROC curves
    assert!(tmp.path().join("trees").join("roc_5_true.csv").exists());
}

#[test]
fn dataset_csv_reader_accepts_train_output_roundtrip() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "c.json", &small_office(20, AttackMode::Basic));
    let sim = cmd_simulate(Some(&config), None, &tmp.path().join("s"), false).unwrap();
    let samples = read_dataset_csv(&sim.output_path("dataset.csv")).unwrap();
    assert_eq!(samples.len(), 12);
    assert!(samples.iter().all(|s| s.features.len() == 10));
    let fakes = samples.iter().filter(|s| s.label == 1).count();
    assert_eq!(fakes, 8); // 4 fake IDs per window x 2 windows
}
