//! Simulator and detection pipeline for Sybil attacks in small mobile robot
//! networks, fingerprinting each transmission through the reflections of a
//! few backscatter tags near the receiver.
//!
//! The crate covers the full loop: scenario simulation (random-waypoint
//! robots, slotted transmissions, three attack behaviors), trace synthesis
//! with inverse-square path loss, signature extraction (smoothing,
//! correlation segmentation, per-tag reflection strengths), similarity
//! vectors over per-window distance tensors, a from-scratch random forest
//! with sorted-feature preprocessing, and an evaluation harness with
//! cross-validation and parameter sweeps.

pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod forest;
pub mod rng;
pub mod scene;
pub mod sigproc;
pub mod similarity;

pub use config::{ring_offsets, AttackMode, ScenarioConfig};
pub use error::{Error, Result};
pub use eval::{
    build_dataset, compute_metrics, corpus_a, corpus_a_base, corpus_b, corpus_b_base,
    cross_validate, evaluate_model, run_sweep, simulate_signatures, sorted_feature_means,
    Aggregation, Corpus, CrossValReport, EvalOutcome, LabeledDataset, MetricsReport,
    PipelineParams, Provenance, SweepRow, SweepSpec, SweepTable,
};
pub use forest::{
    features_per_split, sort_vector, train_forest, DecisionTree, ForestModel, ForestParams,
    LabeledSample, Node,
};
pub use scene::{
    generate_trajectories, schedule_transmissions, synthesize_received_signal,
    tag_reflection_amplitude, SampleTrace, Trajectory, TransmissionEvent,
};
pub use sigproc::{
    build_profiles, extract_signature, moving_average, process_trace, segment_backscatter,
    BitTemplate, MultipathSignature, Segmentation, SignalProfile,
};
pub use similarity::{
    alt_distance, cosine_distance, distance, distance_tensor, mean_vector, similarity_vector,
    DistanceTensor, Metric, SimilarityVector,
};
