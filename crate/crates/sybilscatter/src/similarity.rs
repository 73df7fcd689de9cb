//! Pairwise profile distances, the N x N x L distance tensor, and per-robot
//! similarity vectors (column minima over the other robots).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sigproc::SignalProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Cosine,
    Euclidean,
    Chebyshev,
    Manhattan,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Cosine,
        Metric::Euclidean,
        Metric::Chebyshev,
        Metric::Manhattan,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Cosine => "cosine",
            Metric::Euclidean => "euclidean",
            Metric::Chebyshev => "chebyshev",
            Metric::Manhattan => "manhattan",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Metric::Cosine),
            "euclidean" => Ok(Metric::Euclidean),
            "chebyshev" => Ok(Metric::Chebyshev),
            "manhattan" => Ok(Metric::Manhattan),
            other => Err(Error::Config(format!(
                "unknown metric '{other}' (expected cosine|euclidean|chebyshev|manhattan)"
            ))),
        }
    }
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_lengths(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    Ok(())
}

/// Cosine distance 1 - <p,q> / (|p||q|), in [0, 2].
///
/// Both vectors are normalized before the dot product. That makes the result
/// exactly zero for equal directions and exactly invariant under power-of-two
/// scalings of either input, which the power-scaling neutrality checks lean
/// on; for arbitrary positive scalings it is invariant to ~1e-15.
pub fn cosine_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    check_lengths(p, q)?;
    let np = l2_norm(p);
    let nq = l2_norm(q);
    if np == 0.0 || nq == 0.0 {
        return Err(Error::ZeroNormVector);
    }
    let u: Vec<f64> = p.iter().map(|x| x / np).collect();
    let v: Vec<f64> = q.iter().map(|x| x / nq).collect();
    if u == v {
        return Ok(0.0);
    }
    let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
    Ok(1.0 - dot.clamp(-1.0, 1.0))
}

/// The alternative metrics of the metric-comparison experiment.
pub fn alt_distance(metric: Metric, p: &[f64], q: &[f64]) -> Result<f64> {
    check_lengths(p, q)?;
    let value = match metric {
        Metric::Cosine => return cosine_distance(p, q),
        Metric::Euclidean => p
            .iter()
            .zip(q)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt(),
        Metric::Chebyshev => p
            .iter()
            .zip(q)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max),
        Metric::Manhattan => p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum(),
    };
    Ok(value)
}

/// Metric dispatch used by tensor construction.
pub fn distance(metric: Metric, p: &[f64], q: &[f64]) -> Result<f64> {
    match metric {
        Metric::Cosine => cosine_distance(p, q),
        other => alt_distance(other, p, q),
    }
}

/// Pairwise distances between all N profiles of one window, per slot row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceTensor {
    /// Claimed identities, in profile order.
    pub ids: Vec<usize>,
    /// Absolute slot of row 0, kept for error reporting.
    pub start_slot: usize,
    pub profile_len: usize,
    /// Flattened N x N x L entries.
    entries: Vec<f64>,
}

impl DistanceTensor {
    pub fn num_ids(&self) -> usize {
        self.ids.len()
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize, l: usize) -> f64 {
        self.entries[(m * self.num_ids() + n) * self.profile_len + l]
    }
}

/// Build the N x N x L tensor: entry (m, n, l) is the metric distance between
/// row l of profile m and row l of profile n. All profiles must come from the
/// same window (same start slot) and agree on L and K.
pub fn distance_tensor(profiles: &[SignalProfile], metric: Metric) -> Result<DistanceTensor> {
    let n_ids = profiles.len();
    if n_ids < 2 {
        return Err(Error::TooFewIds { got: n_ids });
    }
    let profile_len = profiles[0].signatures.len();
    let width = profiles[0].signatures.first().map_or(0, Vec::len);
    let start_slot = profiles[0].start_slot;
    for p in profiles {
        if p.signatures.len() != profile_len {
            return Err(Error::DimensionMismatch {
                expected: profile_len,
                got: p.signatures.len(),
            });
        }
        if p.signatures.iter().any(|row| row.len() != width) {
            return Err(Error::Config(format!(
                "profile for id {} has ragged signature rows",
                p.claimed_id
            )));
        }
        if p.start_slot != start_slot {
            return Err(Error::Config(format!(
                "profile for id {} starts at slot {} but the window starts at {}",
                p.claimed_id, p.start_slot, start_slot
            )));
        }
    }
    if metric == Metric::Cosine {
        // surface zero-norm rows with their provenance before any pair math
        for p in profiles {
            for (l, row) in p.signatures.iter().enumerate() {
                if l2_norm(row) == 0.0 {
                    return Err(Error::ZeroNormRow {
                        claimed_id: p.claimed_id,
                        slot: p.start_slot + l,
                    });
                }
            }
        }
    }
    let mut entries = vec![0.0; n_ids * n_ids * profile_len];
    for m in 0..n_ids {
        for n in m + 1..n_ids {
            for l in 0..profile_len {
                let d = distance(metric, &profiles[m].signatures[l], &profiles[n].signatures[l])?;
                entries[(m * n_ids + n) * profile_len + l] = d;
                entries[(n * n_ids + m) * profile_len + l] = d;
            }
        }
    }
    Ok(DistanceTensor {
        ids: profiles.iter().map(|p| p.claimed_id).collect(),
        start_slot,
        profile_len,
        entries,
    })
}

/// Per-robot similarity vector of one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityVector {
    pub claimed_id: usize,
    pub values: Vec<f64>,
}

/// Column minima over the other robots: values[l] = min over i != n of
/// entries[i][n][l]. A small entry means some other robot looked the same
/// at that slot.
pub fn similarity_vector(tensor: &DistanceTensor, n: usize) -> Result<SimilarityVector> {
    fold_columns(tensor, n, f64::min, f64::INFINITY)
}

/// Mean-over-others ablation of [`similarity_vector`], for the extraction
/// comparison experiment.
pub fn mean_vector(tensor: &DistanceTensor, n: usize) -> Result<SimilarityVector> {
    let ids = tensor.num_ids();
    let mut v = fold_columns(tensor, n, |acc, d| acc + d, 0.0)?;
    for value in v.values.iter_mut() {
        *value /= (ids - 1) as f64;
    }
    Ok(v)
}

fn fold_columns(
    tensor: &DistanceTensor,
    n: usize,
    fold: impl Fn(f64, f64) -> f64,
    init: f64,
) -> Result<SimilarityVector> {
    let ids = tensor.num_ids();
    if ids < 2 {
        return Err(Error::TooFewIds { got: ids });
    }
    assert!(n < ids, "robot index {n} out of range");
    let values = (0..tensor.profile_len)
        .map(|l| {
            (0..ids)
                .filter(|&i| i != n)
                .map(|i| tensor.get(i, n, l))
                .fold(init, &fold)
        })
        .collect();
    Ok(SimilarityVector {
        claimed_id: tensor.ids[n],
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn profile(id: usize, rows: Vec<Vec<f64>>) -> SignalProfile {
        SignalProfile {
            claimed_id: id,
            start_slot: 0,
            signatures: rows,
        }
    }

    #[test]
    fn cosine_identical_direction_is_exactly_zero() {
        assert_eq!(
            cosine_distance(&[1.0, 0.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0]).unwrap(),
            0.0
        );
        // parallel but differently scaled
        assert_eq!(
            cosine_distance(&[0.3, 0.7, 0.1], &[0.6, 1.4, 0.2]).unwrap(),
            0.0
        );
    }

    #[test]
    fn cosine_orthogonal_is_one() {
        assert_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn cosine_scale_invariance_on_hand_vectors() {
        let p = [0.21, 0.83, 0.44, 0.09];
        let q = [0.55, 0.12, 0.98, 0.31];
        let base = cosine_distance(&p, &q).unwrap();
        let ps: Vec<f64> = p.iter().map(|x| 1.2 * x).collect();
        let qs: Vec<f64> = q.iter().map(|x| 0.5 * x).collect();
        let scaled = cosine_distance(&ps, &qs).unwrap();
        assert!((base - scaled).abs() < 1e-12);
    }

    #[test]
    fn cosine_rejects_zero_norm() {
        match cosine_distance(&[0.0, 0.0], &[1.0, 0.0]) {
            Err(Error::ZeroNormVector) => {}
            other => panic!("expected ZeroNormVector, got {other:?}"),
        }
    }

    #[test]
    fn alt_distance_hand_values() {
        assert_eq!(
            alt_distance(Metric::Euclidean, &[0.0, 0.0], &[3.0, 4.0]).unwrap(),
            5.0
        );
        assert_eq!(
            alt_distance(Metric::Chebyshev, &[1.0, 5.0], &[4.0, 1.0]).unwrap(),
            4.0
        );
        assert_eq!(
            alt_distance(Metric::Manhattan, &[1.0, 5.0], &[4.0, 1.0]).unwrap(),
            7.0
        );
    }

    #[test]
    fn identical_profiles_give_all_zero_tensor() {
        let rows = vec![vec![0.4, 0.2, 0.9], vec![0.1, 0.5, 0.3]];
        let t = distance_tensor(
            &[profile(0, rows.clone()), profile(1, rows)],
            Metric::Cosine,
        )
        .unwrap();
        for m in 0..2 {
            for n in 0..2 {
                for l in 0..2 {
                    assert_eq!(t.get(m, n, l), 0.0);
                }
            }
        }
    }

    #[test]
    fn tensor_is_symmetric_with_zero_diagonal() {
        let profiles: Vec<SignalProfile> = (0..3)
            .map(|i| {
                profile(
                    i,
                    vec![
                        vec![0.1 + i as f64, 0.2, 0.7],
                        vec![0.9, 0.4 + i as f64, 0.3],
                    ],
                )
            })
            .collect();
        for metric in Metric::ALL {
            let t = distance_tensor(&profiles, metric).unwrap();
            for m in 0..3 {
                for l in 0..2 {
                    assert_eq!(t.get(m, m, l), 0.0);
                    for n in 0..3 {
                        assert_eq!(t.get(m, n, l), t.get(n, m, l));
                    }
                }
            }
        }
    }

    #[test]
    fn tensor_matches_brute_force_recomputation() {
        use rand::Rng;
        let mut rng = crate::rng::derive_stream(11, 0xbf, 0);
        for _ in 0..20 {
            let n_ids = rng.gen_range(2..=5);
            let len = rng.gen_range(1..=4);
            let k = rng.gen_range(1..=4);
            let profiles: Vec<SignalProfile> = (0..n_ids)
                .map(|id| {
                    profile(
                        id,
                        (0..len)
                            .map(|_| (0..k).map(|_| rng.gen_range(0.01..1.0)).collect())
                            .collect(),
                    )
                })
                .collect();
            let t = distance_tensor(&profiles, Metric::Cosine).unwrap();
            for m in 0..n_ids {
                for n in 0..n_ids {
                    for l in 0..len {
                        let expect = if m == n {
                            0.0
                        } else {
                            cosine_distance(&profiles[m].signatures[l], &profiles[n].signatures[l])
                                .unwrap()
                        };
                        assert_eq!(t.get(m, n, l), expect);
                    }
                }
            }
        }
    }

    #[test]
    fn tensor_zero_norm_error_names_id_and_slot() {
        let good = profile(7, vec![vec![0.5, 0.5], vec![0.2, 0.1]]);
        let mut bad = profile(9, vec![vec![0.3, 0.4], vec![0.0, 0.0]]);
        bad.start_slot = 0;
        match distance_tensor(&[good, bad], Metric::Cosine) {
            Err(Error::ZeroNormRow { claimed_id: 9, slot: 1 }) => {}
            other => panic!("expected ZeroNormRow for id 9 slot 1, got {other:?}"),
        }
    }

    #[test]
    fn tensor_requires_two_profiles() {
        let p = profile(0, vec![vec![1.0]]);
        match distance_tensor(&[p], Metric::Cosine) {
            Err(Error::TooFewIds { got: 1 }) => {}
            other => panic!("expected TooFewIds, got {other:?}"),
        }
    }

    #[test]
    fn similarity_vector_takes_column_minima() {
        // three profiles crafted so distances to id 1 differ per row
        let profiles = vec![
            profile(0, vec![vec![1.0, 0.0]]),
            profile(1, vec![vec![0.6, 0.8]]),
            profile(2, vec![vec![0.0, 1.0]]),
        ];
        let t = distance_tensor(&profiles, Metric::Euclidean).unwrap();
        let s = similarity_vector(&t, 1).unwrap();
        let d01 = t.get(0, 1, 0);
        let d21 = t.get(2, 1, 0);
        assert_eq!(s.values, vec![d01.min(d21)]);
        assert_eq!(s.claimed_id, 1);
    }

    #[test]
    fn hand_minimum_example() {
        // column entries {0.4, 0.1, 0.7} for i != n -> 0.1
        let profiles = vec![
            profile(0, vec![vec![0.0]]),
            profile(1, vec![vec![0.4]]),
            profile(2, vec![vec![0.1]]),
            profile(3, vec![vec![0.7]]),
        ];
        let t = distance_tensor(&profiles, Metric::Manhattan).unwrap();
        let s = similarity_vector(&t, 0).unwrap();
        assert_eq!(s.values, vec![0.1]);
    }

    #[test]
    fn two_profiles_copy_the_other_column() {
        let profiles = vec![
            profile(0, vec![vec![0.2, 0.4], vec![0.6, 0.1]]),
            profile(1, vec![vec![0.9, 0.3], vec![0.5, 0.8]]),
        ];
        let t = distance_tensor(&profiles, Metric::Cosine).unwrap();
        let s = similarity_vector(&t, 0).unwrap();
        assert_eq!(s.values, vec![t.get(1, 0, 0), t.get(1, 0, 1)]);
    }

    #[test]
    fn mean_vector_averages_over_others() {
        let profiles = vec![
            profile(0, vec![vec![0.0]]),
            profile(1, vec![vec![0.3]]),
            profile(2, vec![vec![0.6]]),
        ];
        let t = distance_tensor(&profiles, Metric::Manhattan).unwrap();
        let m = mean_vector(&t, 0).unwrap();
        assert!((m.values[0] - 0.45).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn metrics_are_symmetric_with_zero_self_distance(
            p in proptest::collection::vec(0.01f64..10.0, 1..6),
            seed in 0u64..1000,
        ) {
            let mut rng = crate::rng::derive_stream(seed, 0x51, 0);
            use rand::Rng;
            let q: Vec<f64> = p.iter().map(|_| rng.gen_range(0.01..10.0)).collect();
            for metric in Metric::ALL {
                let d_pq = distance(metric, &p, &q).unwrap();
                let d_qp = distance(metric, &q, &p).unwrap();
                prop_assert_eq!(d_pq, d_qp);
                prop_assert_eq!(distance(metric, &p, &p).unwrap(), 0.0);
                prop_assert!(d_pq >= 0.0);
            }
        }

        #[test]
        fn cosine_scale_invariance_random(
            p in proptest::collection::vec(0.001f64..1.0, 2..8),
            alpha in 0.001f64..10.0,
            beta in 0.001f64..10.0,
            seed in 0u64..1000,
        ) {
            let mut rng = crate::rng::derive_stream(seed, 0x52, 0);
            use rand::Rng;
            let q: Vec<f64> = p.iter().map(|_| rng.gen_range(0.001..1.0)).collect();
            let base = cosine_distance(&p, &q).unwrap();
            let ps: Vec<f64> = p.iter().map(|x| alpha * x).collect();
            let qs: Vec<f64> = q.iter().map(|x| beta * x).collect();
            let scaled = cosine_distance(&ps, &qs).unwrap();
            prop_assert!((base - scaled).abs() < 1e-12);
        }

        #[test]
        fn similarity_vector_lower_bounds_columns(
            seed in 0u64..500,
        ) {
            use rand::Rng;
            let mut rng = crate::rng::derive_stream(seed, 0x53, 0);
            let n_ids = rng.gen_range(2..=5);
            let len = rng.gen_range(1..=6);
            let profiles: Vec<SignalProfile> = (0..n_ids)
                .map(|id| profile(id, (0..len)
                    .map(|_| (0..3).map(|_| rng.gen_range(0.01..1.0)).collect())
                    .collect()))
                .collect();
            let t = distance_tensor(&profiles, Metric::Cosine).unwrap();
            for n in 0..n_ids {
                let s = similarity_vector(&t, n).unwrap();
                for l in 0..len {
                    for i in 0..n_ids {
                        if i != n {
                            prop_assert!(s.values[l] <= t.get(i, n, l));
                        }
                    }
                }
            }
        }
    }
}
