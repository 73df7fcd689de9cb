//! Command implementations behind the binary: simulate, train, eval, sweep.
//! Each returns a [`RunManifest`] describing its inputs and every file it
//! wrote; re-running a command with the inputs recorded in the manifest
//! reproduces the data files byte for byte (the manifest itself carries the
//! only timestamp).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::eval::{
    evaluate_model, run_sweep, LabeledDataset, PipelineParams, SweepSpec, SweepTable,
};
use crate::forest::{train_forest, ForestModel, ForestParams, LabeledSample};
use crate::scene::{
    generate_trajectories, schedule_stream, schedule_transmissions, synthesize_with_template,
    trace_stream,
};
use crate::sigproc::BitTemplate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<String>,
    pub dataset_path: Option<String>,
    pub model_path: Option<String>,
    pub sweep_spec_path: Option<String>,
    /// Master seed the command ran with (for simulate: the effective
    /// scenario seed after any --seed override).
    pub seed: u64,
    pub out_dir: String,
    /// Files written, relative to `out_dir`, manifest excluded.
    pub outputs: Vec<String>,
    pub tool_version: String,
    pub unix_timestamp: u64,
}

impl RunManifest {
    fn new(command: &str, seed: u64, out_dir: &Path) -> Self {
        RunManifest {
            command: command.to_string(),
            config_path: None,
            dataset_path: None,
            model_path: None,
            sweep_spec_path: None,
            seed,
            out_dir: out_dir.display().to_string(),
            outputs: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            unix_timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn output_path(&self, name: &str) -> PathBuf {
        Path::new(&self.out_dir).join(name)
    }
}

fn path_string(path: &Path) -> String {
    path.display().to_string()
}

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

fn fmt6_opt(v: Option<f64>) -> String {
    v.map(fmt6).unwrap_or_default()
}

fn write_text(dir: &Path, name: &str, text: &str, manifest: &mut RunManifest) -> Result<()> {
    fs::write(dir.join(name), text)?;
    manifest.outputs.push(name.to_string());
    Ok(())
}

fn write_json<T: Serialize>(
    dir: &Path,
    name: &str,
    value: &T,
    manifest: &mut RunManifest,
) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(dir, name, &text, manifest)
}

fn finish(dir: &Path, manifest: RunManifest) -> Result<RunManifest> {
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join("manifest.json"), text)?;
    Ok(manifest)
}

// ─── dataset CSV ─────────────────────────────────────────────────────────────

/// Feature columns f0..f{L-1} plus a final label column, 6-decimal fixed.
pub fn dataset_to_csv(dataset: &LabeledDataset) -> String {
    let mut out = String::new();
    for i in 0..dataset.profile_len {
        out.push_str(&format!("f{i},"));
    }
    out.push_str("label\n");
    for sample in &dataset.samples {
        for v in &sample.features {
            out.push_str(&fmt6(*v));
            out.push(',');
        }
        out.push_str(&format!("{}\n", sample.label));
    }
    out
}

pub fn read_dataset_csv(path: &Path) -> Result<Vec<LabeledSample>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().last() != Some("label") {
        return Err(Error::Config(format!(
            "dataset {} must end with a 'label' column, found {:?}",
            path.display(),
            headers.iter().last()
        )));
    }
    let width = headers.len() - 1;
    if width == 0 {
        return Err(Error::Config(format!(
            "dataset {} has no feature columns",
            path.display()
        )));
    }
    let mut samples = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != width + 1 {
            return Err(Error::Config(format!(
                "dataset row {row} has {} fields, expected {}",
                record.len(),
                width + 1
            )));
        }
        let parse = |field: &str| -> Result<f64> {
            field
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("dataset row {row}: bad number '{field}'")))
        };
        let features: Result<Vec<f64>> = record.iter().take(width).map(parse).collect();
        let label_field = record.get(width).unwrap_or("");
        let label: u8 = label_field
            .parse()
            .map_err(|_| Error::Config(format!("dataset row {row}: bad label '{label_field}'")))?;
        if label > 1 {
            return Err(Error::Config(format!(
                "dataset row {row}: label must be 0 or 1, got {label}"
            )));
        }
        samples.push(LabeledSample {
            features: features?,
            label,
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(samples)
}

fn provenance_to_csv(dataset: &LabeledDataset) -> String {
    let mut out = String::from("run,attack_mode,scenario_seed,corpus,window,claimed_id\n");
    for p in &dataset.provenance {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.run,
            p.attack_mode.as_str(),
            p.scenario_seed,
            p.corpus,
            p.window,
            p.claimed_id
        ));
    }
    out
}

fn metrics_to_csv(report: &crate::eval::MetricsReport) -> String {
    format!(
        "accuracy,tpr,fpr,auroc\n{},{},{},{}\n",
        fmt6(report.accuracy),
        fmt6_opt(report.tpr),
        fmt6_opt(report.fpr),
        fmt6_opt(report.auroc)
    )
}

fn roc_to_csv(roc: &[(f64, f64)]) -> String {
    let mut out = String::from("fpr,tpr\n");
    for (fpr, tpr) in roc {
        out.push_str(&format!("{},{}\n", fmt6(*fpr), fmt6(*tpr)));
    }
    out
}

fn sweep_to_csv(table: &SweepTable) -> String {
    let mut out = String::new();
    out.push_str(&table.param_names.join(","));
    out.push_str(",accuracy,tpr,fpr,auroc\n");
    for row in &table.rows {
        out.push_str(&row.params.join(","));
        out.push_str(&format!(
            ",{},{},{},{}\n",
            fmt6(row.accuracy),
            fmt6_opt(row.tpr),
            fmt6_opt(row.fpr),
            fmt6_opt(row.auroc)
        ));
    }
    out
}

// ─── commands ────────────────────────────────────────────────────────────────

fn load_config(config_path: Option<&Path>, seed: Option<u64>) -> Result<ScenarioConfig> {
    let mut config = match config_path {
        Some(path) => ScenarioConfig::from_json_file(path)?,
        None => ScenarioConfig::office(),
    };
    if let Some(s) = seed {
        config.rng_seed = s;
    }
    Ok(config)
}

/// Simulate one scenario and write the labeled dataset (`dataset.csv` +
/// `provenance.csv`), the per-slot signatures (`signatures.csv`), optionally
/// every raw trace (`traces.csv`), and the manifest.
///
/// `seed` overrides the config's `rng_seed` when given; without a config
/// file the office preset is used.
pub fn cmd_simulate(
    config_path: Option<&Path>,
    seed: Option<u64>,
    out_dir: &Path,
    dump_traces: bool,
) -> Result<RunManifest> {
    let config = load_config(config_path, seed)?;
    fs::create_dir_all(out_dir)?;
    let mut manifest = RunManifest::new("simulate", config.rng_seed, out_dir);
    manifest.config_path = config_path.map(path_string);

    let pipeline = PipelineParams::for_config(&config);
    let signatures = crate::eval::simulate_signatures(&config, pipeline.smooth_window)?;
    let mut dataset = LabeledDataset::new(pipeline.profile_len);
    crate::eval::extend_dataset(&mut dataset, 0, &config, &signatures, &pipeline)?;

    write_text(out_dir, "dataset.csv", &dataset_to_csv(&dataset), &mut manifest)?;
    write_text(
        out_dir,
        "provenance.csv",
        &provenance_to_csv(&dataset),
        &mut manifest,
    )?;

    let mut sig_csv = String::from("slot,claimed_id");
    for k in 1..=config.num_tags {
        sig_csv.push_str(&format!(",p{k}"));
    }
    sig_csv.push('\n');
    for s in &signatures {
        sig_csv.push_str(&format!("{},{}", s.slot, s.claimed_id));
        for v in &s.reflections {
            sig_csv.push(',');
            sig_csv.push_str(&fmt6(*v));
        }
        sig_csv.push('\n');
    }
    write_text(out_dir, "signatures.csv", &sig_csv, &mut manifest)?;

    if dump_traces {
        // re-synthesize from the same derived streams; traces match the ones
        // the signatures came from exactly
        let trajectories = generate_trajectories(&config)?;
        let template = BitTemplate::for_config(&config);
        let mut out = String::from("slot,claimed_id,sample_index,value\n");
        for slot in 0..config.num_slots {
            let mut schedule_rng = schedule_stream(&config, slot);
            for event in schedule_transmissions(&config, slot, &mut schedule_rng) {
                let mut rng = trace_stream(&config, slot, event.claimed_id);
                let trace = synthesize_with_template(
                    &event,
                    trajectories[event.emitter].positions[slot],
                    &config,
                    &template,
                    &mut rng,
                )?;
                for (i, v) in trace.samples.iter().enumerate() {
                    out.push_str(&format!("{},{},{},{}\n", slot, event.claimed_id, i, fmt6(*v)));
                }
            }
        }
        write_text(out_dir, "traces.csv", &out, &mut manifest)?;
    }

    println!(
        "simulated {} slots x {} ids -> {} samples ({} windows dropped earlier are logged)",
        config.num_slots,
        config.num_ids(),
        dataset.len(),
        dataset.profile_len,
    );
    finish(out_dir, manifest)
}

/// Train a forest on a dataset CSV and write `model.json`.
pub fn cmd_train(
    dataset_path: &Path,
    params: &ForestParams,
    out_dir: &Path,
) -> Result<RunManifest> {
    let samples = read_dataset_csv(dataset_path)?;
    fs::create_dir_all(out_dir)?;
    let mut manifest = RunManifest::new("train", params.seed, out_dir);
    manifest.dataset_path = Some(path_string(dataset_path));

    let model = train_forest(&samples, params)?;
    write_text(out_dir, "model.json", &model.to_text(), &mut manifest)?;

    let fakes = samples.iter().filter(|s| s.label == 1).count();
    println!(
        "trained {} trees ({} features, {} candidates per split, sort {}) on {} samples ({} fake / {} legit)",
        model.num_trees,
        model.num_features,
        model.features_per_split,
        if model.sort_enabled { "on" } else { "off" },
        samples.len(),
        fakes,
        samples.len() - fakes,
    );
    finish(out_dir, manifest)
}

/// Evaluate a saved model against a dataset CSV; writes per-sample
/// `predictions.csv`, `metrics.json`/`metrics.csv`, and `roc.csv`.
pub fn cmd_eval(model_path: &Path, dataset_path: &Path, out_dir: &Path) -> Result<RunManifest> {
    let model = ForestModel::from_text(&fs::read_to_string(model_path)?)?;
    let samples = read_dataset_csv(dataset_path)?;
    let width = samples[0].features.len();
    if width != model.num_features {
        return Err(Error::FeatureWidthMismatch {
            expected: model.num_features,
            got: width,
        });
    }
    fs::create_dir_all(out_dir)?;
    let mut manifest = RunManifest::new("eval", 0, out_dir);
    manifest.model_path = Some(path_string(model_path));
    manifest.dataset_path = Some(path_string(dataset_path));

    let outcome = evaluate_model(&model, &samples)?;
    let mut pred_csv = String::from("index,score,prediction,label\n");
    for (i, ((score, pred), sample)) in outcome
        .scores
        .iter()
        .zip(&outcome.predictions)
        .zip(&samples)
        .enumerate()
    {
        pred_csv.push_str(&format!("{i},{},{pred},{}\n", fmt6(*score), sample.label));
    }
    write_text(out_dir, "predictions.csv", &pred_csv, &mut manifest)?;
    write_json(out_dir, "metrics.json", &outcome.report, &mut manifest)?;
    write_text(
        out_dir,
        "metrics.csv",
        &metrics_to_csv(&outcome.report),
        &mut manifest,
    )?;
    write_text(out_dir, "roc.csv", &roc_to_csv(&outcome.report.roc), &mut manifest)?;

    println!(
        "evaluated {} samples: accuracy {}, tpr {}, fpr {}, auroc {}",
        samples.len(),
        fmt6(outcome.report.accuracy),
        fmt6_opt(outcome.report.tpr),
        fmt6_opt(outcome.report.fpr),
        fmt6_opt(outcome.report.auroc),
    );
    finish(out_dir, manifest)
}

/// Run a sweep spec; writes `results.csv`, `results.json`, and one
/// `roc_<params>.csv` per cell that carries a curve.
pub fn cmd_sweep(
    spec_path: &Path,
    config_path: Option<&Path>,
    seed: u64,
    out_dir: &Path,
) -> Result<RunManifest> {
    let spec = SweepSpec::from_json_file(spec_path)?;
    let base = load_config(config_path, None)?;
    fs::create_dir_all(out_dir)?;
    let mut manifest = RunManifest::new("sweep", seed, out_dir);
    manifest.sweep_spec_path = Some(path_string(spec_path));
    manifest.config_path = config_path.map(path_string);

    let table = run_sweep(&spec, &base, seed)?;
    write_text(out_dir, "results.csv", &sweep_to_csv(&table), &mut manifest)?;
    write_json(out_dir, "results.json", &table, &mut manifest)?;
    for row in &table.rows {
        if let Some(roc) = &row.roc {
            let name = format!("roc_{}.csv", row.params.join("_"));
            write_text(out_dir, &name, &roc_to_csv(roc), &mut manifest)?;
        }
    }

    println!("swept {} cells -> {}", table.rows.len(), out_dir.display());
    finish(out_dir, manifest)
}
