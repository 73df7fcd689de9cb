//! Random forest over similarity vectors, with the ascending-sort feature
//! preprocessing that makes window position irrelevant: each vector is sorted
//! before training and before prediction, so trees split on order statistics
//! ("the smallest value", "the 3rd smallest") rather than on slot indices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_stream, STREAM_TREE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub features: Vec<f64>,
    /// 0 = legitimate, 1 = fake.
    pub label: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub num_trees: usize,
    pub sort_enabled: bool,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            num_trees: 30,
            sort_enabled: true,
            max_depth: None,
            seed: 0,
        }
    }
}

/// Number of random candidate features per split: max(1, floor(log2 L)).
pub fn features_per_split(num_features: usize) -> usize {
    debug_assert!(num_features >= 1);
    (num_features.ilog2() as usize).max(1)
}

/// Returns a copy of `features` sorted ascending.
pub fn sort_vector(features: &[f64]) -> Vec<f64> {
    let mut sorted = features.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        label: u8,
        /// Training samples per class that reached this leaf: [legit, fake].
        counts: [usize; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
}

impl DecisionTree {
    /// Walks the tree; `x <= threshold` descends left.
    pub fn predict(&self, features: &[f64]) -> u8 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { label, .. } => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if features[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    fn max_feature_index(&self) -> Option<usize> {
        fn walk(node: &Node, best: &mut Option<usize>) {
            if let Node::Split {
                feature,
                left,
                right,
                ..
            } = node
            {
                *best = Some(best.map_or(*feature, |b| b.max(*feature)));
                walk(left, best);
                walk(right, best);
            }
        }
        let mut best = None;
        walk(&self.root, &mut best);
        best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub num_trees: usize,
    pub num_features: usize,
    pub features_per_split: usize,
    pub sort_enabled: bool,
    pub trees: Vec<DecisionTree>,
}

impl ForestModel {
    /// Serializes the model as pretty-printed JSON. Training with the same
    /// data and seed reproduces this text byte for byte.
    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    pub fn from_text(text: &str) -> Result<ForestModel> {
        let model: ForestModel =
            serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if model.trees.len() != model.num_trees {
            return Err(Error::ModelFormat(format!(
                "declares {} trees but contains {}",
                model.num_trees,
                model.trees.len()
            )));
        }
        if model.num_features == 0 {
            return Err(Error::ModelFormat("num_features must be >= 1".into()));
        }
        if model.features_per_split == 0 || model.features_per_split > model.num_features {
            return Err(Error::ModelFormat(format!(
                "features_per_split {} out of range for {} features",
                model.features_per_split, model.num_features
            )));
        }
        for (h, tree) in model.trees.iter().enumerate() {
            if let Some(idx) = tree.max_feature_index() {
                if idx >= model.num_features {
                    return Err(Error::ModelFormat(format!(
                        "tree {h} splits on feature {idx} but the model has {} features",
                        model.num_features
                    )));
                }
            }
        }
        Ok(model)
    }

    /// Fraction of trees voting fake. Sorts the input first when the model
    /// was trained on sorted vectors.
    pub fn predict_score(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.num_features {
            return Err(Error::FeatureWidthMismatch {
                expected: self.num_features,
                got: features.len(),
            });
        }
        let sorted;
        let row: &[f64] = if self.sort_enabled {
            sorted = sort_vector(features);
            &sorted
        } else {
            features
        };
        let fake_votes = self
            .trees
            .iter()
            .filter(|tree| tree.predict(row) == 1)
            .count();
        Ok(fake_votes as f64 / self.num_trees as f64)
    }

    /// Majority vote: score >= 0.5 declares the robot fake.
    pub fn predict(&self, features: &[f64]) -> Result<u8> {
        Ok(if self.predict_score(features)? >= 0.5 {
            1
        } else {
            0
        })
    }
}

/// Samples `len` indices uniformly with replacement.
pub fn bootstrap_sample(len: usize, rng: &mut impl rand::Rng) -> Result<Vec<usize>> {
    if len == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok((0..len).map(|_| rng.gen_range(0..len)).collect())
}

fn gini(counts: [usize; 2]) -> f64 {
    let total = (counts[0] + counts[1]) as f64;
    if total == 0.0 {
        return 0.0;
    }
    let p0 = counts[0] as f64 / total;
    let p1 = counts[1] as f64 / total;
    1.0 - p0 * p0 - p1 * p1
}

fn majority_leaf(counts: [usize; 2]) -> Node {
    // ties go to fake: wrongly flagging a legitimate robot is recoverable,
    // admitting a Sybil is not
    let label = if counts[1] >= counts[0] { 1 } else { 0 };
    Node::Leaf { label, counts }
}

fn class_counts(samples: &[LabeledSample], indices: &[usize]) -> [usize; 2] {
    let mut counts = [0usize, 0usize];
    for &i in indices {
        counts[samples[i].label as usize] += 1;
    }
    counts
}

/// Picks `z` distinct feature indices, returned ascending.
fn sample_features(num_features: usize, z: usize, rng: &mut impl rand::Rng) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..num_features).collect();
    for i in 0..z {
        let j = rng.gen_range(i..num_features);
        pool.swap(i, j);
    }
    pool.truncate(z);
    pool.sort_unstable();
    pool
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

/// Grows one CART tree on the bootstrap rows `indices`. At each node it
/// examines `z` random features; thresholds are midpoints between adjacent
/// distinct values; a split must strictly lower the weighted Gini impurity.
pub fn train_tree(
    samples: &[LabeledSample],
    indices: &[usize],
    z: usize,
    max_depth: Option<usize>,
    rng: &mut impl rand::Rng,
) -> Node {
    let num_features = samples[0].features.len();
    grow(samples, indices.to_vec(), num_features, z, max_depth, 0, rng)
}

fn grow(
    samples: &[LabeledSample],
    indices: Vec<usize>,
    num_features: usize,
    z: usize,
    max_depth: Option<usize>,
    depth: usize,
    rng: &mut impl rand::Rng,
) -> Node {
    let counts = class_counts(samples, &indices);
    let node_impurity = gini(counts);
    if node_impurity == 0.0 || max_depth.is_some_and(|d| depth >= d) {
        return majority_leaf(counts);
    }

    let candidates = sample_features(num_features, z, rng);
    let mut best: Option<BestSplit> = None;
    for feature in candidates {
        let mut order: Vec<usize> = indices.clone();
        order.sort_by(|&a, &b| {
            samples[a].features[feature].total_cmp(&samples[b].features[feature])
        });
        let total = order.len();
        let mut left = [0usize, 0usize];
        for i in 0..total - 1 {
            left[samples[order[i]].label as usize] += 1;
            let v = samples[order[i]].features[feature];
            let next = samples[order[i + 1]].features[feature];
            if v == next {
                continue;
            }
            let right = [counts[0] - left[0], counts[1] - left[1]];
            let n_left = (i + 1) as f64;
            let n_right = (total - i - 1) as f64;
            let weighted =
                (n_left * gini(left) + n_right * gini(right)) / total as f64;
            if weighted < best.as_ref().map_or(node_impurity, |b| b.impurity) {
                best = Some(BestSplit {
                    feature,
                    threshold: (v + next) / 2.0,
                    impurity: weighted,
                });
            }
        }
    }

    let Some(split) = best else {
        return majority_leaf(counts);
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .into_iter()
        .partition(|&i| samples[i].features[split.feature] <= split.threshold);
    let left = grow(samples, left_idx, num_features, z, max_depth, depth + 1, rng);
    let right = grow(samples, right_idx, num_features, z, max_depth, depth + 1, rng);
    Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Trains the full forest. Each tree gets its own derived RNG stream, so the
/// result is independent of thread scheduling.
pub fn train_forest(samples: &[LabeledSample], params: &ForestParams) -> Result<ForestModel> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if params.num_trees == 0 {
        return Err(Error::Config("num_trees must be >= 1".into()));
    }
    let num_features = samples[0].features.len();
    if num_features == 0 {
        return Err(Error::Config("samples must have at least one feature".into()));
    }
    for s in samples {
        if s.features.len() != num_features {
            return Err(Error::FeatureWidthMismatch {
                expected: num_features,
                got: s.features.len(),
            });
        }
        if s.label > 1 {
            return Err(Error::Config(format!(
                "labels must be 0 or 1, got {}",
                s.label
            )));
        }
    }
    let mut seen = [false, false];
    for s in samples {
        seen[s.label as usize] = true;
    }
    if !(seen[0] && seen[1]) {
        return Err(Error::SingleClass(if seen[1] { 1 } else { 0 }));
    }

    let prepared: Vec<LabeledSample> = if params.sort_enabled {
        samples
            .iter()
            .map(|s| LabeledSample {
                features: sort_vector(&s.features),
                label: s.label,
            })
            .collect()
    } else {
        samples.to_vec()
    };

    let z = features_per_split(num_features);
    let trees: Vec<DecisionTree> = (0..params.num_trees as u64)
        .into_par_iter()
        .map(|h| {
            let mut rng = derive_stream(params.seed, STREAM_TREE, h);
            let indices = bootstrap_sample(prepared.len(), &mut rng)
                .expect("dataset verified non-empty");
            DecisionTree {
                root: train_tree(&prepared, &indices, z, params.max_depth, &mut rng),
            }
        })
        .collect();

    Ok(ForestModel {
        num_trees: params.num_trees,
        num_features,
        features_per_split: z,
        sort_enabled: params.sort_enabled,
        trees,
    })
}
