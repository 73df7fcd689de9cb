//! Python bindings for the Sybil-detection pipeline: scenario configuration,
//! corpus simulation, forest training, and evaluation.
//!
//! The module mirrors the Rust API: build a `ScenarioConfig`, turn it into a
//! labeled `Dataset` with `simulate`/`corpus_a`/`corpus_b`, fit a
//! `RandomForest`, and score it with `evaluate`.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use sybilscatter::eval::{
    build_dataset, default_smooth_window, evaluate_model, extend_dataset, simulate_signatures,
    Aggregation, LabeledDataset, PipelineParams,
};
use sybilscatter::{
    cosine_distance as core_cosine_distance, distance as core_distance, train_forest as core_train,
    AttackMode, Error, ForestModel, ForestParams, LabeledSample, Metric, ScenarioConfig,
};

fn to_py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_mode(s: &str) -> PyResult<AttackMode> {
    match s {
        "basic" => Ok(AttackMode::Basic),
        "power_scaling" => Ok(AttackMode::PowerScaling),
        "colluding" => Ok(AttackMode::Colluding),
        other => Err(PyValueError::new_err(format!(
            "unknown attack mode '{other}' (expected basic, power_scaling, or colluding)"
        ))),
    }
}

fn parse_metric(s: &str) -> PyResult<Metric> {
    s.parse()
        .map_err(|_| PyValueError::new_err(format!("unknown metric '{s}'")))
}

fn parse_aggregation(s: &str) -> PyResult<Aggregation> {
    match s {
        "min" => Ok(Aggregation::Min),
        "mean" => Ok(Aggregation::Mean),
        other => Err(PyValueError::new_err(format!(
            "unknown aggregation '{other}' (expected min or mean)"
        ))),
    }
}

/// Zip parallel feature/label lists into labeled samples, validating shape.
fn zip_samples(features: Vec<Vec<f64>>, labels: Vec<u8>) -> PyResult<Vec<LabeledSample>> {
    if features.len() != labels.len() {
        return Err(PyValueError::new_err(format!(
            "{} feature rows but {} labels",
            features.len(),
            labels.len()
        )));
    }
    Ok(features
        .into_iter()
        .zip(labels)
        .map(|(features, label)| LabeledSample { features, label })
        .collect())
}

// ─── scenario configuration ──────────────────────────────────────────────────

/// One simulated trial: arena, robot cast, attack mode, tags, noise, seed.
#[pyclass(name = "ScenarioConfig", module = "sybilscatter_py", skip_from_py_object)]
#[derive(Clone)]
struct PyScenarioConfig {
    inner: ScenarioConfig,
}

#[pymethods]
impl PyScenarioConfig {
    /// The office preset; tweak fields from there.
    #[new]
    fn new() -> Self {
        Self {
            inner: ScenarioConfig::office(),
        }
    }

    /// Desk-scale office preset: 4.5 m x 5.5 m room.
    #[staticmethod]
    fn office() -> Self {
        Self {
            inner: ScenarioConfig::office(),
        }
    }

    /// Open rooftop preset: 8 m x 10 m.
    #[staticmethod]
    fn rooftop() -> Self {
        Self {
            inner: ScenarioConfig::rooftop(),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(to_py_err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(to_py_err)
    }

    /// Total claimed identities: legitimate plus fake.
    fn num_ids(&self) -> usize {
        self.inner.num_ids()
    }

    /// Total physical robots: legitimate ones plus attackers.
    fn num_robots(&self) -> usize {
        self.inner.num_robots()
    }

    #[getter]
    fn get_arena_width(&self) -> f64 {
        self.inner.arena_width
    }

    #[setter]
    fn set_arena_width(&mut self, v: f64) {
        self.inner.arena_width = v;
    }

    #[getter]
    fn get_arena_height(&self) -> f64 {
        self.inner.arena_height
    }

    #[setter]
    fn set_arena_height(&mut self, v: f64) {
        self.inner.arena_height = v;
    }

    #[getter]
    fn get_num_legit(&self) -> usize {
        self.inner.num_legit
    }

    #[setter]
    fn set_num_legit(&mut self, v: usize) {
        self.inner.num_legit = v;
    }

    #[getter]
    fn get_num_attackers(&self) -> usize {
        self.inner.num_attackers
    }

    #[setter]
    fn set_num_attackers(&mut self, v: usize) {
        self.inner.num_attackers = v;
    }

    #[getter]
    fn get_num_fake_ids(&self) -> usize {
        self.inner.num_fake_ids
    }

    #[setter]
    fn set_num_fake_ids(&mut self, v: usize) {
        self.inner.num_fake_ids = v;
    }

    #[getter]
    fn get_attack_mode(&self) -> &'static str {
        self.inner.attack_mode.as_str()
    }

    #[setter]
    fn set_attack_mode(&mut self, v: &str) -> PyResult<()> {
        self.inner.attack_mode = parse_mode(v)?;
        Ok(())
    }

    #[getter]
    fn get_robot_speed(&self) -> f64 {
        self.inner.robot_speed
    }

    #[setter]
    fn set_robot_speed(&mut self, v: f64) {
        self.inner.robot_speed = v;
    }

    #[getter]
    fn get_slot_interval(&self) -> f64 {
        self.inner.slot_interval
    }

    #[setter]
    fn set_slot_interval(&mut self, v: f64) {
        self.inner.slot_interval = v;
    }

    #[getter]
    fn get_num_slots(&self) -> usize {
        self.inner.num_slots
    }

    #[setter]
    fn set_num_slots(&mut self, v: usize) {
        self.inner.num_slots = v;
    }

    #[getter]
    fn get_num_tags(&self) -> usize {
        self.inner.num_tags
    }

    #[setter]
    fn set_num_tags(&mut self, v: usize) {
        self.inner.num_tags = v;
    }

    #[getter]
    fn get_tag_offsets(&self) -> Vec<[f64; 2]> {
        self.inner.tag_offsets.clone()
    }

    #[setter]
    fn set_tag_offsets(&mut self, v: Vec<[f64; 2]>) {
        self.inner.tag_offsets = v;
    }

    #[getter]
    fn get_tag_gain(&self) -> f64 {
        self.inner.tag_gain
    }

    #[setter]
    fn set_tag_gain(&mut self, v: f64) {
        self.inner.tag_gain = v;
    }

    #[getter]
    fn get_noise_sigma(&self) -> f64 {
        self.inner.noise_sigma
    }

    #[setter]
    fn set_noise_sigma(&mut self, v: f64) {
        self.inner.noise_sigma = v;
    }

    #[getter]
    fn get_multipath_sigma(&self) -> f64 {
        self.inner.multipath_sigma
    }

    #[setter]
    fn set_multipath_sigma(&mut self, v: f64) {
        self.inner.multipath_sigma = v;
    }

    #[getter]
    fn get_power_scale_set(&self) -> Vec<f64> {
        self.inner.power_scale_set.clone()
    }

    #[setter]
    fn set_power_scale_set(&mut self, v: Vec<f64>) {
        self.inner.power_scale_set = v;
    }

    #[getter]
    fn get_rng_seed(&self) -> u64 {
        self.inner.rng_seed
    }

    #[setter]
    fn set_rng_seed(&mut self, v: u64) {
        self.inner.rng_seed = v;
    }

    #[getter]
    fn get_samples_per_bit(&self) -> usize {
        self.inner.samples_per_bit
    }

    #[setter]
    fn set_samples_per_bit(&mut self, v: usize) {
        self.inner.samples_per_bit = v;
    }

    #[getter]
    fn get_bits_per_tag(&self) -> usize {
        self.inner.bits_per_tag
    }

    #[setter]
    fn set_bits_per_tag(&mut self, v: usize) {
        self.inner.bits_per_tag = v;
    }

    fn __repr__(&self) -> String {
        format!(
            "ScenarioConfig({} mode, {:.1}x{:.1} m, {} legit + {} fake ids, {} slots, seed {})",
            self.inner.attack_mode.as_str(),
            self.inner.arena_width,
            self.inner.arena_height,
            self.inner.num_legit,
            self.inner.num_fake_ids,
            self.inner.num_slots,
            self.inner.rng_seed,
        )
    }
}

// ─── datasets ────────────────────────────────────────────────────────────────

/// Labeled similarity-feature rows plus where each one came from.
#[pyclass(name = "Dataset", module = "sybilscatter_py")]
struct PyDataset {
    inner: LabeledDataset,
    /// Windows dropped because feature extraction failed (e.g. a zero-norm
    /// signature row under the cosine metric).
    #[pyo3(get)]
    dropped_windows: usize,
}

#[pymethods]
impl PyDataset {
    #[getter]
    fn profile_len(&self) -> usize {
        self.inner.profile_len
    }

    #[getter]
    fn features(&self) -> Vec<Vec<f64>> {
        self.inner
            .samples
            .iter()
            .map(|s| s.features.clone())
            .collect()
    }

    #[getter]
    fn labels(&self) -> Vec<u8> {
        self.inner.labels()
    }

    /// One row per sample: (run, attack_mode, scenario_seed, corpus, window,
    /// claimed_id).
    #[getter]
    fn provenance(&self) -> Vec<(usize, String, u64, String, usize, usize)> {
        self.inner
            .provenance
            .iter()
            .map(|p| {
                (
                    p.run,
                    p.attack_mode.as_str().to_string(),
                    p.scenario_seed,
                    p.corpus.as_str().to_string(),
                    p.window,
                    p.claimed_id,
                )
            })
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        let fake = self.inner.labels().iter().filter(|&&l| l == 1).count();
        format!(
            "Dataset({} samples x {} features, {} fake / {} legit)",
            self.inner.len(),
            self.inner.profile_len,
            fake,
            self.inner.len() - fake,
        )
    }
}

fn pipeline_for(
    config: &ScenarioConfig,
    profile_len: usize,
    metric: &str,
    aggregation: &str,
) -> PyResult<PipelineParams> {
    Ok(PipelineParams {
        profile_len,
        smooth_window: default_smooth_window(config.samples_per_bit),
        metric: parse_metric(metric)?,
        aggregation: parse_aggregation(aggregation)?,
    })
}

/// Run one scenario end to end: traces, signatures, windowed similarity
/// features.
#[pyfunction]
#[pyo3(signature = (config, profile_len = 10, metric = "cosine", aggregation = "min"))]
fn simulate(
    config: &PyScenarioConfig,
    profile_len: usize,
    metric: &str,
    aggregation: &str,
) -> PyResult<PyDataset> {
    let pipeline = pipeline_for(&config.inner, profile_len, metric, aggregation)?;
    let signatures =
        simulate_signatures(&config.inner, pipeline.smooth_window).map_err(to_py_err)?;
    let mut dataset = LabeledDataset::new(profile_len);
    let dropped_windows =
        extend_dataset(&mut dataset, 0, &config.inner, &signatures, &pipeline).map_err(to_py_err)?;
    Ok(PyDataset {
        inner: dataset,
        dropped_windows,
    })
}

/// Simulate the train/test corpus: `runs` scenarios alternating the basic and
/// power-scaling attacks, with per-run seeds derived from `seed`.
#[pyfunction]
#[pyo3(signature = (base, runs = 4, seed = 0, profile_len = 10, metric = "cosine", aggregation = "min"))]
fn corpus_a(
    base: &PyScenarioConfig,
    runs: usize,
    seed: u64,
    profile_len: usize,
    metric: &str,
    aggregation: &str,
) -> PyResult<PyDataset> {
    let pipeline = pipeline_for(&base.inner, profile_len, metric, aggregation)?;
    let configs = sybilscatter::eval::corpus_a(&base.inner, runs, seed);
    let inner = build_dataset(&configs, &pipeline).map_err(to_py_err)?;
    Ok(PyDataset {
        inner,
        dropped_windows: 0,
    })
}

/// Simulate the hold-out corpus: `runs` colluding-attack scenarios with
/// per-run seeds disjoint from `corpus_a`'s.
#[pyfunction]
#[pyo3(signature = (base, runs = 2, seed = 0, profile_len = 10, metric = "cosine", aggregation = "min"))]
fn corpus_b(
    base: &PyScenarioConfig,
    runs: usize,
    seed: u64,
    profile_len: usize,
    metric: &str,
    aggregation: &str,
) -> PyResult<PyDataset> {
    let pipeline = pipeline_for(&base.inner, profile_len, metric, aggregation)?;
    let configs = sybilscatter::eval::corpus_b(&base.inner, runs, seed);
    let inner = build_dataset(&configs, &pipeline).map_err(to_py_err)?;
    Ok(PyDataset {
        inner,
        dropped_windows: 0,
    })
}

// ─── random forest ───────────────────────────────────────────────────────────

/// Majority-vote ensemble of Gini-trained decision trees; a vote fraction
/// >= 0.5 flags the identity as fake.
#[pyclass(name = "RandomForest", module = "sybilscatter_py")]
struct PyRandomForest {
    inner: ForestModel,
}

#[pymethods]
impl PyRandomForest {
    #[getter]
    fn num_trees(&self) -> usize {
        self.inner.num_trees
    }

    #[getter]
    fn num_features(&self) -> usize {
        self.inner.num_features
    }

    #[getter]
    fn features_per_split(&self) -> usize {
        self.inner.features_per_split
    }

    #[getter]
    fn sort_enabled(&self) -> bool {
        self.inner.sort_enabled
    }

    /// Fraction of trees voting fake.
    fn score(&self, features: Vec<f64>) -> PyResult<f64> {
        self.inner.predict_score(&features).map_err(to_py_err)
    }

    /// 1 = fake, 0 = legitimate.
    fn predict(&self, features: Vec<f64>) -> PyResult<u8> {
        self.inner.predict(&features).map_err(to_py_err)
    }

    fn predict_batch(&self, features: Vec<Vec<f64>>) -> PyResult<Vec<u8>> {
        features
            .iter()
            .map(|x| self.inner.predict(x).map_err(to_py_err))
            .collect()
    }

    fn score_batch(&self, features: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        features
            .iter()
            .map(|x| self.inner.predict_score(x).map_err(to_py_err))
            .collect()
    }

    /// The model's canonical text form (JSON).
    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: ForestModel::from_text(text).map_err(to_py_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        std::fs::write(path, self.inner.to_text()).map_err(|e| to_py_err(e.into()))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| to_py_err(e.into()))?;
        Ok(Self {
            inner: ForestModel::from_text(&text).map_err(to_py_err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "RandomForest({} trees, {} features, {} candidates per split, sort {})",
            self.inner.num_trees,
            self.inner.num_features,
            self.inner.features_per_split,
            if self.inner.sort_enabled { "on" } else { "off" },
        )
    }
}

/// Train a forest on labeled feature rows (labels: 1 = fake, 0 = legitimate).
#[pyfunction]
#[pyo3(signature = (features, labels, num_trees = 30, sort = true, max_depth = None, seed = 0))]
fn train_forest(
    features: Vec<Vec<f64>>,
    labels: Vec<u8>,
    num_trees: usize,
    sort: bool,
    max_depth: Option<usize>,
    seed: u64,
) -> PyResult<PyRandomForest> {
    let samples = zip_samples(features, labels)?;
    let params = ForestParams {
        num_trees,
        sort_enabled: sort,
        max_depth,
        seed,
    };
    Ok(PyRandomForest {
        inner: core_train(&samples, &params).map_err(to_py_err)?,
    })
}

// ─── evaluation ──────────────────────────────────────────────────────────────

/// Predictions plus detection metrics for one evaluation.
#[pyclass(name = "EvalResult", module = "sybilscatter_py")]
struct PyEvalResult {
    #[pyo3(get)]
    predictions: Vec<u8>,
    #[pyo3(get)]
    scores: Vec<f64>,
    #[pyo3(get)]
    accuracy: f64,
    /// None when the labels contain only one class.
    #[pyo3(get)]
    tpr: Option<f64>,
    #[pyo3(get)]
    fpr: Option<f64>,
    #[pyo3(get)]
    auroc: Option<f64>,
    /// (fpr, tpr) points from (0,0) to (1,1).
    #[pyo3(get)]
    roc: Vec<(f64, f64)>,
}

#[pymethods]
impl PyEvalResult {
    fn __repr__(&self) -> String {
        let fmt_opt = |v: Option<f64>| match v {
            Some(x) => format!("{x:.3}"),
            None => "n/a".to_string(),
        };
        format!(
            "EvalResult(accuracy {:.3}, tpr {}, fpr {}, auroc {})",
            self.accuracy,
            fmt_opt(self.tpr),
            fmt_opt(self.fpr),
            fmt_opt(self.auroc),
        )
    }
}

/// Score a model on labeled feature rows.
#[pyfunction]
fn evaluate(
    model: &PyRandomForest,
    features: Vec<Vec<f64>>,
    labels: Vec<u8>,
) -> PyResult<PyEvalResult> {
    let samples = zip_samples(features, labels)?;
    let outcome = evaluate_model(&model.inner, &samples).map_err(to_py_err)?;
    Ok(PyEvalResult {
        predictions: outcome.predictions,
        scores: outcome.scores,
        accuracy: outcome.report.accuracy,
        tpr: outcome.report.tpr,
        fpr: outcome.report.fpr,
        auroc: outcome.report.auroc,
        roc: outcome.report.roc,
    })
}

// ─── distances ───────────────────────────────────────────────────────────────

/// Cosine distance (1 - cosine similarity); errors on zero-norm input.
#[pyfunction]
fn cosine_distance(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    core_cosine_distance(&p, &q).map_err(to_py_err)
}

/// Distance under a named metric: cosine, euclidean, chebyshev, or manhattan.
#[pyfunction]
fn distance(metric: &str, p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    core_distance(parse_metric(metric)?, &p, &q).map_err(to_py_err)
}

/// Candidate features per tree split: max(1, floor(log2(num_features))).
#[pyfunction]
fn features_per_split(num_features: usize) -> usize {
    sybilscatter::features_per_split(num_features)
}

#[pymodule]
fn sybilscatter_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenarioConfig>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyRandomForest>()?;
    m.add_class::<PyEvalResult>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(corpus_a, m)?)?;
    m.add_function(wrap_pyfunction!(corpus_b, m)?)?;
    m.add_function(wrap_pyfunction!(train_forest, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(cosine_distance, m)?)?;
    m.add_function(wrap_pyfunction!(distance, m)?)?;
    m.add_function(wrap_pyfunction!(features_per_split, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
