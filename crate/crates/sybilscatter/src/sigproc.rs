//! Trace processing: smoothing, backscatter segmentation, per-tag reflection
//! extraction, and profile windowing.
//!
//! The receiver sees a flat direct-path amplitude with the tags' on/off
//! reflections stacked on top, one tag at a time. Processing recovers, per
//! trace, the K-vector of per-tag reflection strengths (the multipath
//! signature), then stacks L consecutive signatures into a signal profile.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_stream, STREAM_PATTERN};
use crate::ScenarioConfig;

/// The fixed on/off pattern every tag modulates, `bits_per_tag` long.
///
/// Shared by all scenario participants so the receiver can correlate against
/// one known template. Deterministic in `bits_per_tag` only; the first bit is
/// forced on and the last off so the pattern is never degenerate.
pub fn shared_bit_pattern(bits_per_tag: usize) -> Vec<bool> {
    let mut rng = derive_stream(0, STREAM_PATTERN, bits_per_tag as u64);
    let mut bits: Vec<bool> = (0..bits_per_tag).map(|_| rng.gen()).collect();
    bits[0] = true;
    bits[bits_per_tag - 1] = false;
    bits
}

/// Known transmit template: per-tag bit pattern concatenated over K tags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitTemplate {
    pub bits: Vec<bool>,
    pub samples_per_bit: usize,
    pub bits_per_tag: usize,
}

impl BitTemplate {
    pub fn new(bits: Vec<bool>, samples_per_bit: usize, bits_per_tag: usize) -> Result<Self> {
        if samples_per_bit == 0 {
            return Err(Error::Config("samples_per_bit must be at least 1".into()));
        }
        if bits_per_tag == 0 || bits.is_empty() || bits.len() % bits_per_tag != 0 {
            return Err(Error::Config(format!(
                "template length {} is not a multiple of bits_per_tag {}",
                bits.len(),
                bits_per_tag
            )));
        }
        for (k, chunk) in bits.chunks(bits_per_tag).enumerate() {
            if chunk.iter().all(|&b| b) || chunk.iter().all(|&b| !b) {
                return Err(Error::Config(format!(
                    "tag {k} pattern is all-{} (needs both bit values)",
                    if chunk[0] { "one" } else { "zero" }
                )));
            }
        }
        Ok(BitTemplate {
            bits,
            samples_per_bit,
            bits_per_tag,
        })
    }

    /// Template for a scenario: the shared pattern repeated once per tag.
    pub fn for_config(config: &ScenarioConfig) -> Self {
        let pattern = shared_bit_pattern(config.bits_per_tag);
        let bits: Vec<bool> = (0..config.num_tags).flat_map(|_| pattern.clone()).collect();
        BitTemplate {
            bits,
            samples_per_bit: config.samples_per_bit,
            bits_per_tag: config.bits_per_tag,
        }
    }

    pub fn num_tags(&self) -> usize {
        self.bits.len() / self.bits_per_tag
    }

    /// Samples occupied by one tag's bits.
    pub fn tag_span(&self) -> usize {
        self.bits_per_tag * self.samples_per_bit
    }

    /// Total template length in samples.
    pub fn total_samples(&self) -> usize {
        self.bits.len() * self.samples_per_bit
    }

    /// Bit value at a sample offset into the template.
    pub fn bit_at(&self, sample: usize) -> bool {
        self.bits[sample / self.samples_per_bit]
    }
}

/// Mean of `values`, anchored to the first element so a run of identical
/// values averages to exactly that value.
fn anchored_mean(values: &[f64]) -> f64 {
    let base = values[0];
    let sum: f64 = values.iter().map(|v| v - base).sum();
    base + sum / values.len() as f64
}

/// Sliding-window mean; output has length `len - window + 1`.
pub fn moving_average(trace: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::Config("smoothing window must be at least 1".into()));
    }
    if window > trace.len() {
        return Err(Error::WindowExceedsTrace {
            window,
            len: trace.len(),
        });
    }
    Ok((0..trace.len() - window + 1)
        .map(|i| anchored_mean(&trace[i..i + window]))
        .collect())
}

/// Result of locating the backscatter region inside a smoothed trace.
#[derive(Debug, Clone)]
pub struct Segmentation {
    pub t_start: usize,
    pub t_end: usize,
    /// One sub-segment per tag, each `bits_per_tag * samples_per_bit` long.
    pub per_tag: Vec<Vec<f64>>,
}

/// Locate the backscatter region by correlating the smoothed trace against
/// the template bits and taking the highest-scoring offset (smallest index on
/// ties), then split it into per-tag sub-segments.
///
/// On a smoothed trace the peak sits within `window - 1` samples before the
/// raw onset: smoothing spreads the onset backwards by at most the window.
pub fn segment_backscatter(smoothed: &[f64], template: &BitTemplate) -> Result<Segmentation> {
    let total = template.total_samples();
    if smoothed.len() < total {
        return Err(Error::TraceTooShort {
            len: smoothed.len(),
            template: total,
        });
    }
    let ones: Vec<usize> = (0..total).filter(|&t| template.bit_at(t)).collect();
    let mut best = f64::NEG_INFINITY;
    let mut t_start = 0;
    for n in 0..=smoothed.len() - total {
        let c: f64 = ones.iter().map(|&p| smoothed[n + p]).sum();
        if c > best {
            best = c;
            t_start = n;
        }
    }
    let t_end = t_start + total;
    let span = template.tag_span();
    let per_tag = (0..template.num_tags())
        .map(|k| smoothed[t_start + k * span..t_start + (k + 1) * span].to_vec())
        .collect();
    Ok(Segmentation {
        t_start,
        t_end,
        per_tag,
    })
}

/// Per-tag reflection strengths: mean amplitude over reflecting bits minus
/// mean over non-reflecting bits, one value per tag.
///
/// `smooth_window` is the window the trace was smoothed with; the first and
/// last `window - 1` samples of every bit are skipped because their smoothed
/// values straddle a bit edge (and absorb the up-to-`window - 1` segmentation
/// offset). Requires `samples_per_bit >= 2 * smooth_window - 1`.
pub fn extract_signature(
    seg: &Segmentation,
    template: &BitTemplate,
    smooth_window: usize,
) -> Result<Vec<f64>> {
    let spb = template.samples_per_bit;
    let guard = smooth_window.saturating_sub(1);
    if spb < 2 * guard + 1 {
        return Err(Error::Config(format!(
            "samples_per_bit {spb} too small for smoothing window {smooth_window}"
        )));
    }
    if seg.per_tag.len() != template.num_tags() {
        return Err(Error::DimensionMismatch {
            expected: template.num_tags(),
            got: seg.per_tag.len(),
        });
    }
    let mut signature = Vec::with_capacity(template.num_tags());
    for (k, chunk) in seg.per_tag.iter().enumerate() {
        if chunk.len() != template.tag_span() {
            return Err(Error::DimensionMismatch {
                expected: template.tag_span(),
                got: chunk.len(),
            });
        }
        let mut reflecting = Vec::new();
        let mut quiet = Vec::new();
        for (b, &bit) in template.bits[k * template.bits_per_tag..(k + 1) * template.bits_per_tag]
            .iter()
            .enumerate()
        {
            let lo = b * spb + guard;
            let hi = (b + 1) * spb - guard;
            let dst = if bit { &mut reflecting } else { &mut quiet };
            dst.extend_from_slice(&chunk[lo..hi]);
        }
        if reflecting.is_empty() || quiet.is_empty() {
            return Err(Error::Config(format!(
                "tag {k} pattern has no usable reflecting or quiet samples"
            )));
        }
        signature.push(anchored_mean(&reflecting) - anchored_mean(&quiet));
    }
    Ok(signature)
}

/// Smooth, segment, and extract in one step.
pub fn process_trace(
    samples: &[f64],
    template: &BitTemplate,
    smooth_window: usize,
) -> Result<Vec<f64>> {
    let smoothed = moving_average(samples, smooth_window)?;
    let seg = segment_backscatter(&smoothed, template)?;
    extract_signature(&seg, template, smooth_window)
}

/// One extracted multipath signature, tied to the slot and claimed identity
/// it was observed under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipathSignature {
    pub claimed_id: usize,
    pub slot: usize,
    /// One reflection strength per tag (p_1 .. p_K).
    pub reflections: Vec<f64>,
}

/// L consecutive signatures of one claimed identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalProfile {
    pub claimed_id: usize,
    /// Absolute slot index of the first row.
    pub start_slot: usize,
    /// L signature rows of K values each, ordered by slot.
    pub signatures: Vec<Vec<f64>>,
}

/// Stack per-slot signatures into tumbling windows of `profile_len` slots.
///
/// Windows are aligned to absolute slot numbers (slots [0, L), [L, 2L), ...).
/// A window in which an ID appears but misses at least one slot is discarded
/// with a warning; the count of discarded windows is returned alongside.
pub fn build_profiles(
    signatures: &[MultipathSignature],
    profile_len: usize,
) -> Result<(Vec<SignalProfile>, usize)> {
    if profile_len == 0 {
        return Err(Error::Config("profile_len must be at least 1".into()));
    }
    let mut by_id: BTreeMap<usize, BTreeMap<usize, &MultipathSignature>> = BTreeMap::new();
    for sig in signatures {
        by_id.entry(sig.claimed_id).or_default().insert(sig.slot, sig);
    }
    let mut profiles = Vec::new();
    let mut dropped = 0;
    for (&claimed_id, slots) in &by_id {
        let last_slot = *slots.keys().next_back().expect("nonempty group");
        for window in 0..=last_slot / profile_len {
            let start = window * profile_len;
            let rows: Vec<&MultipathSignature> = (start..start + profile_len)
                .filter_map(|s| slots.get(&s).copied())
                .collect();
            if rows.len() == profile_len {
                profiles.push(SignalProfile {
                    claimed_id,
                    start_slot: start,
                    signatures: rows.iter().map(|s| s.reflections.clone()).collect(),
                });
            } else if !rows.is_empty() {
                dropped += 1;
                log::warn!(
                    "discarding window starting at slot {start} for id {claimed_id}: \
                     {} of {profile_len} slots present",
                    rows.len()
                );
            }
        }
    }
    Ok((profiles, dropped))
}
