//! Evaluation harness: labeled-dataset assembly from simulated runs,
//! detection metrics (accuracy/TPR/FPR/ROC/AUROC), stratified k-fold
//! cross-validation, and the parameter sweeps.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ring_offsets, AttackMode, ScenarioConfig};
use crate::error::{Error, Result};
use crate::forest::{train_forest, ForestModel, ForestParams, LabeledSample};
use crate::rng::{derive_seed, derive_stream, STREAM_FOLDS, STREAM_RUN};
use crate::scene::{generate_trajectories, schedule_stream, schedule_transmissions, synthesize_with_template, trace_stream};
use crate::sigproc::{build_profiles, process_trace, BitTemplate, MultipathSignature, SignalProfile};
use crate::similarity::{distance_tensor, mean_vector, similarity_vector, Metric};

// ─── datasets ────────────────────────────────────────────────────────────────

/// Which corpus a sample belongs to: A is the train/test corpus (basic and
/// power-scaling runs), B holds colluding runs and is never trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Corpus {
    A,
    B,
}

impl Corpus {
    pub fn from_mode(mode: AttackMode) -> Corpus {
        match mode {
            AttackMode::Basic | AttackMode::PowerScaling => Corpus::A,
            AttackMode::Colluding => Corpus::B,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Corpus::A => "A",
            Corpus::B => "B",
        }
    }
}

impl std::fmt::Display for Corpus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a sample came from: which run, which window, which claimed ID.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Index of the run within its corpus.
    pub run: usize,
    pub attack_mode: AttackMode,
    /// The run's scenario seed.
    pub scenario_seed: u64,
    pub corpus: Corpus,
    /// Window index (start slot / profile length).
    pub window: usize,
    pub claimed_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    /// Feature width of every sample (the profile length L).
    pub profile_len: usize,
    pub samples: Vec<LabeledSample>,
    pub provenance: Vec<Provenance>,
}

impl LabeledDataset {
    pub fn new(profile_len: usize) -> Self {
        LabeledDataset {
            profile_len,
            samples: Vec::new(),
            provenance: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.samples.iter().map(|s| s.label).collect()
    }

    fn push(&mut self, sample: LabeledSample, prov: Provenance) {
        debug_assert_eq!(sample.features.len(), self.profile_len);
        self.samples.push(sample);
        self.provenance.push(prov);
    }
}

/// How per-window similarity features are aggregated over the other robots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Column minima — the production pipeline.
    Min,
    /// Column means — ablation baseline that colluding attackers can dilute.
    Mean,
}

/// Knobs of the trace-to-features pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub profile_len: usize,
    pub smooth_window: usize,
    pub metric: Metric,
    pub aggregation: Aggregation,
}

/// A fifth of a bit keeps eight-plus clean samples per bit after edge guards.
pub fn default_smooth_window(samples_per_bit: usize) -> usize {
    (samples_per_bit / 5).max(1)
}

impl PipelineParams {
    pub fn for_config(config: &ScenarioConfig) -> Self {
        PipelineParams {
            profile_len: 10,
            smooth_window: default_smooth_window(config.samples_per_bit),
            metric: Metric::Cosine,
            aggregation: Aggregation::Min,
        }
    }
}

/// Run the scene simulation and signature extraction for every (slot, ID)
/// transmission of one scenario. Slots are processed in parallel; the output
/// is ordered by (slot, claimed id) regardless of scheduling.
pub fn simulate_signatures(
    config: &ScenarioConfig,
    smooth_window: usize,
) -> Result<Vec<MultipathSignature>> {
    config.validate()?;
    let trajectories = generate_trajectories(config)?;
    let template = BitTemplate::for_config(config);
    let per_slot: Result<Vec<Vec<MultipathSignature>>> = (0..config.num_slots)
        .into_par_iter()
        .map(|slot| {
            let mut schedule_rng = schedule_stream(config, slot);
            let events = schedule_transmissions(config, slot, &mut schedule_rng);
            let mut out = Vec::with_capacity(events.len());
            for event in &events {
                let emitter_pos = trajectories[event.emitter].positions[slot];
                let mut rng = trace_stream(config, slot, event.claimed_id);
                let trace =
                    synthesize_with_template(event, emitter_pos, config, &template, &mut rng)?;
                let reflections = process_trace(&trace.samples, &template, smooth_window)?;
                out.push(MultipathSignature {
                    claimed_id: event.claimed_id,
                    slot,
                    reflections,
                });
            }
            Ok(out)
        })
        .collect();
    Ok(per_slot?.into_iter().flatten().collect())
}

/// Group complete profiles by their window start slot, IDs ascending within
/// each window.
pub fn group_windows(profiles: Vec<SignalProfile>) -> BTreeMap<usize, Vec<SignalProfile>> {
    let mut windows: BTreeMap<usize, Vec<SignalProfile>> = BTreeMap::new();
    for p in profiles {
        windows.entry(p.start_slot).or_default().push(p);
    }
    windows
}

/// Turn one run's signatures into labeled samples, appended to `dataset`.
/// Windows that fail in the distance stage (for example a zero-norm row under
/// the cosine metric) are dropped with a warning; the total number of dropped
/// windows is returned.
pub fn extend_dataset(
    dataset: &mut LabeledDataset,
    run: usize,
    config: &ScenarioConfig,
    signatures: &[MultipathSignature],
    pipeline: &PipelineParams,
) -> Result<usize> {
    let (profiles, mut dropped) = build_profiles(signatures, pipeline.profile_len)?;
    for (start_slot, group) in group_windows(profiles) {
        let features = window_features(&group, pipeline);
        match features {
            Ok(rows) => {
                for (profile, values) in group.iter().zip(rows) {
                    dataset.push(
                        LabeledSample {
                            features: values,
                            label: config.is_fake(profile.claimed_id) as u8,
                        },
                        Provenance {
                            run,
                            attack_mode: config.attack_mode,
                            scenario_seed: config.rng_seed,
                            corpus: Corpus::from_mode(config.attack_mode),
                            window: start_slot / pipeline.profile_len,
                            claimed_id: profile.claimed_id,
                        },
                    );
                }
            }
            Err(e) => {
                dropped += 1;
                log::warn!("dropping window at slot {start_slot} of run {run}: {e}");
            }
        }
    }
    Ok(dropped)
}

/// Per-ID feature vectors of one window: the distance tensor reduced by the
/// configured aggregation.
pub fn window_features(
    group: &[SignalProfile],
    pipeline: &PipelineParams,
) -> Result<Vec<Vec<f64>>> {
    let tensor = distance_tensor(group, pipeline.metric)?;
    (0..group.len())
        .map(|n| {
            let v = match pipeline.aggregation {
                Aggregation::Min => similarity_vector(&tensor, n)?,
                Aggregation::Mean => mean_vector(&tensor, n)?,
            };
            Ok(v.values)
        })
        .collect()
}

/// Simulate every run and assemble the labeled dataset.
pub fn build_dataset(
    configs: &[ScenarioConfig],
    pipeline: &PipelineParams,
) -> Result<LabeledDataset> {
    let mut dataset = LabeledDataset::new(pipeline.profile_len);
    let mut dropped = 0;
    for (run, config) in configs.iter().enumerate() {
        let signatures = simulate_signatures(config, pipeline.smooth_window)?;
        dropped += extend_dataset(&mut dataset, run, config, &signatures, pipeline)?;
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} incomplete or degenerate windows");
    }
    Ok(dataset)
}

// ─── corpora ─────────────────────────────────────────────────────────────────

/// Office cast tuned for training corpora: 2 legitimate + 3 fake IDs makes
/// labels 60/40 positive/negative.
pub fn corpus_a_base() -> ScenarioConfig {
    ScenarioConfig {
        num_fake_ids: 3,
        ..ScenarioConfig::office()
    }
}

/// Office cast for the colluding hold-out corpus; 4 fake IDs split evenly
/// across the 2 attackers.
pub fn corpus_b_base() -> ScenarioConfig {
    ScenarioConfig {
        attack_mode: AttackMode::Colluding,
        ..ScenarioConfig::office()
    }
}

/// Corpus-A runs: alternating basic and power-scaling scenarios with run
/// seeds derived from the master seed.
pub fn corpus_a(base: &ScenarioConfig, runs: usize, master_seed: u64) -> Vec<ScenarioConfig> {
    (0..runs)
        .map(|r| {
            let mut c = base.clone();
            c.attack_mode = if r % 2 == 0 {
                AttackMode::Basic
            } else {
                AttackMode::PowerScaling
            };
            c.rng_seed = derive_seed(master_seed, STREAM_RUN, r as u64);
            c
        })
        .collect()
}

/// Corpus-B runs: colluding scenarios, seeded disjointly from corpus A.
pub fn corpus_b(base: &ScenarioConfig, runs: usize, master_seed: u64) -> Vec<ScenarioConfig> {
    (0..runs)
        .map(|r| {
            let mut c = base.clone();
            c.attack_mode = AttackMode::Colluding;
            c.rng_seed = derive_seed(master_seed, STREAM_RUN, (1 << 32) | r as u64);
            c
        })
        .collect()
}

// ─── metrics ─────────────────────────────────────────────────────────────────

/// Detection metrics of one evaluation. `tpr`/`fpr` are `None` when the label
/// set has no positives / no negatives; `roc`/`auroc` need both classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    /// (fpr, tpr) points from sweeping the threshold over the distinct
    /// scores, starting at (0,0) and ending at (1,1).
    pub roc: Vec<(f64, f64)>,
    pub auroc: Option<f64>,
}

fn check_binary(name: &str, values: &[u8]) -> Result<()> {
    if let Some(v) = values.iter().find(|&&v| v > 1) {
        return Err(Error::Config(format!("{name} must be 0 or 1, got {v}")));
    }
    Ok(())
}

/// Accuracy/TPR/FPR from hard predictions; ROC and trapezoidal AUROC from the
/// scores. A sample is predicted positive at threshold t when score >= t.
pub fn compute_metrics(predictions: &[u8], scores: &[f64], labels: &[u8]) -> Result<MetricsReport> {
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: predictions.len(),
        });
    }
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_binary("predictions", predictions)?;
    check_binary("labels", labels)?;

    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut tn = 0usize;
    let mut fn_ = 0usize;
    for (&p, &y) in predictions.iter().zip(labels) {
        match (y, p) {
            (1, 1) => tp += 1,
            (1, 0) => fn_ += 1,
            (0, 1) => fp += 1,
            (0, 0) => tn += 1,
            _ => unreachable!("binary-checked"),
        }
    }
    let positives = tp + fn_;
    let negatives = fp + tn;
    let accuracy = (tp + tn) as f64 / labels.len() as f64;
    let tpr = (positives > 0).then(|| tp as f64 / positives as f64);
    let fpr = (negatives > 0).then(|| fp as f64 / negatives as f64);

    let (roc, auroc) = if positives > 0 && negatives > 0 {
        let roc = roc_points(scores, labels, positives, negatives);
        let auroc = trapezoid_area(&roc);
        (roc, Some(auroc))
    } else {
        (Vec::new(), None)
    };

    Ok(MetricsReport {
        accuracy,
        tpr,
        fpr,
        roc,
        auroc,
    })
}

fn roc_points(
    scores: &[f64],
    labels: &[u8],
    positives: usize,
    negatives: usize,
) -> Vec<(f64, f64)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        // consume the whole tied-score group before emitting a point
        let score = scores[order[i]];
        while i < order.len() && scores[order[i]] == score {
            match labels[order[i]] {
                1 => tp += 1,
                _ => fp += 1,
            }
            i += 1;
        }
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
    }
    debug_assert_eq!(*points.last().unwrap(), (1.0, 1.0));
    points
}

fn trapezoid_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

/// Hard predictions, vote-fraction scores, and the metrics report for a
/// dataset under one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub predictions: Vec<u8>,
    pub scores: Vec<f64>,
    pub report: MetricsReport,
}

pub fn evaluate_model(model: &ForestModel, samples: &[LabeledSample]) -> Result<EvalOutcome> {
    let mut predictions = Vec::with_capacity(samples.len());
    let mut scores = Vec::with_capacity(samples.len());
    for sample in samples {
        let score = model.predict_score(&sample.features)?;
        scores.push(score);
        predictions.push((score >= 0.5) as u8);
    }
    let labels: Vec<u8> = samples.iter().map(|s| s.label).collect();
    let report = compute_metrics(&predictions, &scores, &labels)?;
    Ok(EvalOutcome {
        predictions,
        scores,
        report,
    })
}

/// Per-index means of the ascending-sorted feature vectors.
pub fn sorted_feature_means(samples: &[LabeledSample]) -> Vec<f64> {
    let width = samples.first().map_or(0, |s| s.features.len());
    let mut sums = vec![0.0; width];
    for sample in samples {
        for (i, v) in crate::forest::sort_vector(&sample.features).into_iter().enumerate() {
            sums[i] += v;
        }
    }
    for s in sums.iter_mut() {
        *s /= samples.len() as f64;
    }
    sums
}

// ─── cross-validation ────────────────────────────────────────────────────────

/// Stratified fold assignment: both classes are shuffled, then dealt
/// round-robin with a single running cursor, so fold sizes differ by at most
/// one overall and per class. Errors if some fold would miss a class.
pub fn stratified_folds(labels: &[u8], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Config(format!("folds must be >= 2, got {folds}")));
    }
    check_binary("labels", labels)?;
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    if pos.len() < folds || neg.len() < folds {
        return Err(Error::FoldsUnsatisfiable {
            folds,
            positives: pos.len(),
            negatives: neg.len(),
        });
    }
    let mut rng = derive_stream(seed, STREAM_FOLDS, 0);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut assignment = vec![0usize; labels.len()];
    for (cursor, &i) in pos.iter().chain(neg.iter()).enumerate() {
        assignment[i] = cursor % folds;
    }
    Ok(assignment)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValReport {
    pub per_fold: Vec<MetricsReport>,
    pub mean_accuracy: f64,
    pub mean_tpr: Option<f64>,
    pub mean_fpr: Option<f64>,
    pub mean_auroc: Option<f64>,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let collected: Option<Vec<f64>> = values.collect();
    collected.map(|v| v.iter().sum::<f64>() / v.len() as f64)
}

/// Train on k-1 folds, test on the held-out fold, rotate, average. The fold
/// shuffle and each fold's forest derive from `params.seed`, so a seed pins
/// the whole procedure.
pub fn cross_validate(
    dataset: &LabeledDataset,
    folds: usize,
    params: &ForestParams,
) -> Result<CrossValReport> {
    let labels = dataset.labels();
    let assignment = stratified_folds(&labels, folds, params.seed)?;
    let per_fold: Result<Vec<MetricsReport>> = (0..folds)
        .map(|fold| {
            let split = |held_out: bool| -> Vec<LabeledSample> {
                dataset
                    .samples
                    .iter()
                    .zip(&assignment)
                    .filter(|(_, &a)| (a == fold) == held_out)
                    .map(|(s, _)| s.clone())
                    .collect()
            };
            let train = split(false);
            let test = split(true);
            let fold_params = ForestParams {
                seed: derive_seed(params.seed, STREAM_FOLDS, 1 + fold as u64),
                ..*params
            };
            let model = train_forest(&train, &fold_params)?;
            Ok(evaluate_model(&model, &test)?.report)
        })
        .collect();
    let per_fold = per_fold?;
    Ok(CrossValReport {
        mean_accuracy: per_fold.iter().map(|r| r.accuracy).sum::<f64>() / folds as f64,
        mean_tpr: mean_of(per_fold.iter().map(|r| r.tpr)),
        mean_fpr: mean_of(per_fold.iter().map(|r| r.fpr)),
        mean_auroc: mean_of(per_fold.iter().map(|r| r.auroc)),
        per_fold,
    })
}

// ─── sweeps ──────────────────────────────────────────────────────────────────

fn default_tag_counts() -> Vec<usize> {
    vec![2, 3, 4]
}
fn default_profile_lens() -> Vec<usize> {
    (2..=16).collect()
}
fn default_grid_runs() -> usize {
    4
}
fn default_grid_slots() -> usize {
    48
}
fn default_metric_axis() -> Vec<Metric> {
    Metric::ALL.to_vec()
}
fn default_power_axis() -> Vec<bool> {
    vec![false, true]
}
fn default_eval_runs() -> usize {
    4
}
fn default_eval_slots() -> usize {
    60
}
fn default_profile_len() -> usize {
    10
}
fn default_tree_counts() -> Vec<usize> {
    (1..=10).map(|i| i * 5).collect()
}
fn default_sort_axis() -> Vec<bool> {
    vec![true, false]
}
fn default_train_runs() -> usize {
    4
}
fn default_test_runs() -> usize {
    2
}

/// One experiment sweep. Every variant owns its grid axes plus the corpus
/// sizing; omitted fields take the defaults used throughout the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "sweep", rename_all = "snake_case")]
pub enum SweepSpec {
    /// Cross-validated AUROC over the (tag count, profile length) grid.
    ProfileSize {
        #[serde(default = "default_tag_counts")]
        tag_counts: Vec<usize>,
        #[serde(default = "default_profile_lens")]
        profile_lens: Vec<usize>,
        #[serde(default = "default_grid_runs")]
        runs: usize,
        #[serde(default = "default_grid_slots")]
        num_slots: usize,
    },
    /// Cross-validated metrics for each distance metric, with and without
    /// power-scaling attackers.
    DistanceMetric {
        #[serde(default = "default_metric_axis")]
        metrics: Vec<Metric>,
        #[serde(default = "default_power_axis")]
        power_scaling: Vec<bool>,
        #[serde(default = "default_eval_runs")]
        runs: usize,
        #[serde(default = "default_eval_slots")]
        num_slots: usize,
        #[serde(default = "default_profile_len")]
        profile_len: usize,
    },
    /// Train on corpus A, test on the colluding corpus B, over forest size
    /// and the sort switch.
    Trees {
        #[serde(default = "default_tree_counts")]
        num_trees: Vec<usize>,
        #[serde(default = "default_sort_axis")]
        sort: Vec<bool>,
        #[serde(default = "default_train_runs")]
        train_runs: usize,
        #[serde(default = "default_test_runs")]
        test_runs: usize,
        #[serde(default = "default_eval_slots")]
        num_slots: usize,
        #[serde(default = "default_profile_len")]
        profile_len: usize,
    },
}

impl SweepSpec {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn param_names(&self) -> Vec<String> {
        match self {
            SweepSpec::ProfileSize { .. } => vec!["tags".into(), "profile_len".into()],
            SweepSpec::DistanceMetric { .. } => vec!["metric".into(), "power_scaling".into()],
            SweepSpec::Trees { .. } => vec!["num_trees".into(), "sort".into()],
        }
    }

    pub fn num_cells(&self) -> usize {
        match self {
            SweepSpec::ProfileSize {
                tag_counts,
                profile_lens,
                ..
            } => tag_counts.len() * profile_lens.len(),
            SweepSpec::DistanceMetric {
                metrics,
                power_scaling,
                ..
            } => metrics.len() * power_scaling.len(),
            SweepSpec::Trees {
                num_trees, sort, ..
            } => num_trees.len() * sort.len(),
        }
    }
}

/// One grid cell: parameter values (in `param_names` order) plus metrics.
/// Cross-validated cells report fold means and carry no ROC curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub params: Vec<String>,
    pub accuracy: f64,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub auroc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub roc: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub param_names: Vec<String>,
    pub rows: Vec<SweepRow>,
}

fn cv_row(params: Vec<String>, cv: &CrossValReport) -> SweepRow {
    SweepRow {
        params,
        accuracy: cv.mean_accuracy,
        tpr: cv.mean_tpr,
        fpr: cv.mean_fpr,
        auroc: cv.mean_auroc,
        roc: None,
    }
}

/// Run a sweep against a base scenario. All cells share the run seeds derived
/// from `master_seed`, so cell differences are parameter effects, not
/// sampling noise. Corpus B appears only as test data.
pub fn run_sweep(
    spec: &SweepSpec,
    base: &ScenarioConfig,
    master_seed: u64,
) -> Result<SweepTable> {
    let forest_params = ForestParams {
        seed: master_seed,
        ..ForestParams::default()
    };
    let mut rows = Vec::with_capacity(spec.num_cells());
    match spec {
        SweepSpec::ProfileSize {
            tag_counts,
            profile_lens,
            runs,
            num_slots,
        } => {
            let radius = base.tag_offsets[0]
                .iter()
                .map(|c| c * c)
                .sum::<f64>()
                .sqrt();
            for &k in tag_counts {
                let mut base_k = base.clone();
                base_k.num_tags = k;
                base_k.tag_offsets = ring_offsets(k, radius);
                base_k.num_slots = *num_slots;
                let configs = corpus_a(&base_k, *runs, master_seed);
                let smooth = default_smooth_window(base_k.samples_per_bit);
                let sims: Result<Vec<Vec<MultipathSignature>>> = configs
                    .iter()
                    .map(|c| simulate_signatures(c, smooth))
                    .collect();
                let sims = sims?;
                for &l in profile_lens {
                    let pipeline = PipelineParams {
                        profile_len: l,
                        smooth_window: smooth,
                        metric: Metric::Cosine,
                        aggregation: Aggregation::Min,
                    };
                    let mut dataset = LabeledDataset::new(l);
                    for (run, (config, sigs)) in configs.iter().zip(&sims).enumerate() {
                        extend_dataset(&mut dataset, run, config, sigs, &pipeline)?;
                    }
                    let cv = cross_validate(&dataset, 3, &forest_params)?;
                    rows.push(cv_row(vec![k.to_string(), l.to_string()], &cv));
                }
            }
        }
        SweepSpec::DistanceMetric {
            metrics,
            power_scaling,
            runs,
            num_slots,
            profile_len,
        } => {
            for &ps in power_scaling {
                let mut base_ps = base.clone();
                base_ps.num_slots = *num_slots;
                let mode = if ps {
                    AttackMode::PowerScaling
                } else {
                    AttackMode::Basic
                };
                let configs: Vec<ScenarioConfig> = (0..*runs)
                    .map(|r| {
                        let mut c = base_ps.clone();
                        c.attack_mode = mode;
                        c.rng_seed = derive_seed(master_seed, STREAM_RUN, r as u64);
                        c
                    })
                    .collect();
                let smooth = default_smooth_window(base_ps.samples_per_bit);
                let sims: Result<Vec<Vec<MultipathSignature>>> = configs
                    .iter()
                    .map(|c| simulate_signatures(c, smooth))
                    .collect();
                let sims = sims?;
                for &metric in metrics {
                    let pipeline = PipelineParams {
                        profile_len: *profile_len,
                        smooth_window: smooth,
                        metric,
                        aggregation: Aggregation::Min,
                    };
                    let mut dataset = LabeledDataset::new(*profile_len);
                    for (run, (config, sigs)) in configs.iter().zip(&sims).enumerate() {
                        extend_dataset(&mut dataset, run, config, sigs, &pipeline)?;
                    }
                    let cv = cross_validate(&dataset, 3, &forest_params)?;
                    rows.push(cv_row(vec![metric.to_string(), ps.to_string()], &cv));
                }
            }
        }
        SweepSpec::Trees {
            num_trees,
            sort,
            train_runs,
            test_runs,
            num_slots,
            profile_len,
        } => {
            let mut base_runs = base.clone();
            base_runs.num_slots = *num_slots;
            let pipeline = PipelineParams {
                profile_len: *profile_len,
                smooth_window: default_smooth_window(base_runs.samples_per_bit),
                metric: Metric::Cosine,
                aggregation: Aggregation::Min,
            };
            let train_set = build_dataset(&corpus_a(&base_runs, *train_runs, master_seed), &pipeline)?;
            let test_set = build_dataset(&corpus_b(&base_runs, *test_runs, master_seed), &pipeline)?;
            for &h in num_trees {
                for &s in sort {
                    let params = ForestParams {
                        num_trees: h,
                        sort_enabled: s,
                        max_depth: None,
                        seed: master_seed,
                    };
                    let model = train_forest(&train_set.samples, &params)?;
                    let outcome = evaluate_model(&model, &test_set.samples)?;
                    rows.push(SweepRow {
                        params: vec![h.to_string(), s.to_string()],
                        accuracy: outcome.report.accuracy,
                        tpr: outcome.report.tpr,
                        fpr: outcome.report.fpr,
                        auroc: outcome.report.auroc,
                        roc: Some(outcome.report.roc.clone()),
                    });
                }
            }
        }
    }
    Ok(SweepTable {
        param_names: spec.param_names(),
        rows,
    })
}
