//! Mobile-network scene simulation: robot trajectories, per-slot transmission
//! schedules under the three attack modes, and synthesis of the backscattered
//! amplitude traces the receiver records.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::{AttackMode, ScenarioConfig};
use crate::error::{Error, Result};
use crate::rng::{derive_stream, STREAM_SCHEDULE, STREAM_TRACE, STREAM_TRAJECTORY};
use crate::sigproc::BitTemplate;

/// Flat amplitude of the emitter's direct path at unit transmit power.
pub const DIRECT_PATH_AMPLITUDE: f64 = 1.0;
/// Closest approach to a tag the path-loss model accepts, meters.
pub const MIN_TAG_DISTANCE: f64 = 0.01;
/// Minimum separation between start positions, meters.
const MIN_START_SEPARATION: f64 = 0.01;
/// Clearance robots keep around each tag, meters; tags are physical objects
/// and this comfortably exceeds [`MIN_TAG_DISTANCE`].
pub const TAG_CLEARANCE: f64 = 0.05;

/// One robot's position per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub robot: usize,
    pub positions: Vec<[f64; 2]>,
}

/// One claimed-identity broadcast in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionEvent {
    pub slot: usize,
    pub claimed_id: usize,
    /// Physical robot index actually emitting.
    pub emitter: usize,
    /// Power multiplier; 1 unless the power-scaling attack applies.
    pub transmit_power: f64,
}

/// Amplitude trace recorded by the receiver for one event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleTrace {
    pub samples: Vec<f64>,
    /// Sample index where the backscatter region begins (simulator-only
    /// ground truth, never shown to the detection pipeline).
    pub ground_truth_start: usize,
}

/// Canonical per-slot rng stream for schedule draws.
pub fn schedule_stream(config: &ScenarioConfig, slot: usize) -> ChaCha8Rng {
    derive_stream(config.rng_seed, STREAM_SCHEDULE, slot as u64)
}

/// Canonical per-event rng stream for trace synthesis. Independent of the
/// schedule stream so attack-mode draws never shift padding or noise.
pub fn trace_stream(config: &ScenarioConfig, slot: usize, claimed_id: usize) -> ChaCha8Rng {
    derive_stream(
        config.rng_seed,
        STREAM_TRACE,
        ((slot as u64) << 20) | claimed_id as u64,
    )
}

/// Random-waypoint trajectories, one per physical robot. Robots steer around
/// the tags: waypoints whose approach segment would cut through a tag's
/// clearance disk are redrawn.
pub fn generate_trajectories(config: &ScenarioConfig) -> Result<Vec<Trajectory>> {
    config.validate()?;
    let step = config.robot_speed * config.slot_interval;
    let tags = config.tag_positions();
    let mut starts: Vec<[f64; 2]> = Vec::new();
    let mut trajectories = Vec::with_capacity(config.num_robots());
    for robot in 0..config.num_robots() {
        let mut rng = derive_stream(config.rng_seed, STREAM_TRAJECTORY, robot as u64);
        let start = pick_distinct_start(&mut rng, config, &tags, &starts)?;
        starts.push(start);
        let mut pos = start;
        let mut target = pick_waypoint(&mut rng, config, &tags, pos)?;
        let mut positions = Vec::with_capacity(config.num_slots);
        for _ in 0..config.num_slots {
            positions.push(pos);
            let dx = target[0] - pos[0];
            let dy = target[1] - pos[1];
            let dist = (dx * dx + dy * dy).sqrt();
            if dist <= step {
                pos = target;
                target = pick_waypoint(&mut rng, config, &tags, pos)?;
            } else {
                pos = [pos[0] + dx / dist * step, pos[1] + dy / dist * step];
            }
        }
        trajectories.push(Trajectory { robot, positions });
    }
    Ok(trajectories)
}

fn random_point(rng: &mut ChaCha8Rng, config: &ScenarioConfig) -> [f64; 2] {
    [
        rng.gen_range(0.0..config.arena_width),
        rng.gen_range(0.0..config.arena_height),
    ]
}

/// Distance from point `p` to the segment `a`-`b`.
fn segment_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len_sq = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len_sq == 0.0 {
        0.0
    } else {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len_sq).clamp(0.0, 1.0)
    };
    let dx = p[0] - (a[0] + t * ab[0]);
    let dy = p[1] - (a[1] + t * ab[1]);
    (dx * dx + dy * dy).sqrt()
}

fn path_clear(from: [f64; 2], to: [f64; 2], tags: &[[f64; 2]]) -> bool {
    tags.iter()
        .all(|&tag| segment_distance(from, to, tag) >= TAG_CLEARANCE)
}

/// Next waypoint whose straight-line approach keeps clear of every tag.
fn pick_waypoint(
    rng: &mut ChaCha8Rng,
    config: &ScenarioConfig,
    tags: &[[f64; 2]],
    from: [f64; 2],
) -> Result<[f64; 2]> {
    for _ in 0..1000 {
        let p = random_point(rng, config);
        if path_clear(from, p, tags) {
            return Ok(p);
        }
    }
    Err(Error::Config(format!(
        "arena {} x {} leaves no tag-free paths from ({}, {})",
        config.arena_width, config.arena_height, from[0], from[1]
    )))
}

fn pick_distinct_start(
    rng: &mut ChaCha8Rng,
    config: &ScenarioConfig,
    tags: &[[f64; 2]],
    taken: &[[f64; 2]],
) -> Result<[f64; 2]> {
    for _ in 0..1000 {
        let p = random_point(rng, config);
        let clear = taken.iter().all(|q| {
            let dx = p[0] - q[0];
            let dy = p[1] - q[1];
            dx * dx + dy * dy >= MIN_START_SEPARATION * MIN_START_SEPARATION
        }) && path_clear(p, p, tags);
        if clear {
            return Ok(p);
        }
    }
    Err(Error::Config(format!(
        "arena {} x {} too small to hold {} distinct start positions",
        config.arena_width,
        config.arena_height,
        taken.len() + 1
    )))
}

/// Attacker that statically holds fake ID index `fake_idx` (basic and
/// power-scaling modes): round-robin assignment, fixed for the scenario.
pub fn static_assignment(config: &ScenarioConfig, fake_idx: usize) -> usize {
    config.num_legit + fake_idx % config.num_attackers
}

/// All transmissions of one slot, exactly one per claimed identity, ordered
/// by claimed id.
pub fn schedule_transmissions(
    config: &ScenarioConfig,
    slot: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<TransmissionEvent> {
    assert!(slot < config.num_slots, "slot {slot} out of range");
    let mut events = Vec::with_capacity(config.num_ids());
    for id in 0..config.num_legit {
        events.push(TransmissionEvent {
            slot,
            claimed_id: id,
            emitter: id,
            transmit_power: 1.0,
        });
    }
    match config.attack_mode {
        AttackMode::Basic | AttackMode::PowerScaling => {
            for fake_idx in 0..config.num_fake_ids {
                let transmit_power = if config.attack_mode == AttackMode::PowerScaling {
                    config.power_scale_set[rng.gen_range(0..config.power_scale_set.len())]
                } else {
                    1.0
                };
                events.push(TransmissionEvent {
                    slot,
                    claimed_id: config.num_legit + fake_idx,
                    emitter: static_assignment(config, fake_idx),
                    transmit_power,
                });
            }
        }
        AttackMode::Colluding => {
            // fresh random equal partition of the fake IDs every slot
            let mut order: Vec<usize> = (0..config.num_fake_ids).collect();
            order.shuffle(rng);
            let per_attacker = config.num_fake_ids / config.num_attackers;
            let mut emitter_of = vec![0usize; config.num_fake_ids];
            for (g, group) in order.chunks(per_attacker).enumerate() {
                for &fake_idx in group {
                    emitter_of[fake_idx] = config.num_legit + g;
                }
            }
            for (fake_idx, &emitter) in emitter_of.iter().enumerate() {
                events.push(TransmissionEvent {
                    slot,
                    claimed_id: config.num_legit + fake_idx,
                    emitter,
                    transmit_power: 1.0,
                });
            }
        }
    }
    events
}

/// Reflected amplitude of one tag for an emitter at `emitter_pos`:
/// sqrt(transmit_power * tag_gain / (d_kt^2 * d_kr^2)), before any multipath
/// perturbation.
pub fn tag_reflection_amplitude(
    config: &ScenarioConfig,
    emitter_pos: [f64; 2],
    tag: usize,
    transmit_power: f64,
) -> Result<f64> {
    let tag_pos = {
        let r = config.receiver_position();
        let o = config.tag_offsets[tag];
        [r[0] + o[0], r[1] + o[1]]
    };
    let dx = emitter_pos[0] - tag_pos[0];
    let dy = emitter_pos[1] - tag_pos[1];
    let d_kt = (dx * dx + dy * dy).sqrt();
    if d_kt < MIN_TAG_DISTANCE {
        return Err(Error::TagSingularity {
            tag,
            distance: d_kt,
            min: MIN_TAG_DISTANCE,
        });
    }
    let o = config.tag_offsets[tag];
    let d_kr = (o[0] * o[0] + o[1] * o[1]).sqrt();
    let base = (config.tag_gain / (d_kt * d_kt * d_kr * d_kr)).sqrt();
    Ok(transmit_power.sqrt() * base)
}

/// Synthesize the receiver's amplitude trace for one transmission.
///
/// The trace is transmit-scaled direct path plus, tag by tag in turn, that
/// tag's reflected amplitude gated by the shared bit pattern, with random
/// unmodulated padding on both sides and additive Gaussian noise on top. The
/// whole noiseless signal scales with sqrt(transmit_power), as both the
/// carrier and the reflections ride on the same emission.
pub fn synthesize_received_signal(
    event: &TransmissionEvent,
    emitter_pos: [f64; 2],
    config: &ScenarioConfig,
    rng: &mut ChaCha8Rng,
) -> Result<SampleTrace> {
    let template = BitTemplate::for_config(config);
    synthesize_with_template(event, emitter_pos, config, &template, rng)
}

/// Same as [`synthesize_received_signal`] with the template precomputed,
/// for tight simulation loops.
pub fn synthesize_with_template(
    event: &TransmissionEvent,
    emitter_pos: [f64; 2],
    config: &ScenarioConfig,
    template: &BitTemplate,
    rng: &mut ChaCha8Rng,
) -> Result<SampleTrace> {
    debug_assert!(
        (0.0..=config.arena_width).contains(&emitter_pos[0])
            && (0.0..=config.arena_height).contains(&emitter_pos[1]),
        "emitter outside arena"
    );
    let spb = config.samples_per_bit;
    let scale = event.transmit_power.sqrt();
    let lead = rng.gen_range(spb..=3 * spb);
    let trail = rng.gen_range(spb..=3 * spb);

    let mut amplitudes = Vec::with_capacity(config.num_tags);
    for tag in 0..config.num_tags {
        // amplitude carries sqrt(P_t) already; multipath jitters it per slot
        let mut amp = tag_reflection_amplitude(config, emitter_pos, tag, event.transmit_power)?;
        if config.multipath_sigma > 0.0 {
            let normal = Normal::new(0.0, config.multipath_sigma).expect("finite sigma");
            amp = (amp * (1.0 + normal.sample(rng))).max(0.0);
        }
        amplitudes.push(amp);
    }

    let off_value = scale * DIRECT_PATH_AMPLITUDE;
    let mut samples = Vec::with_capacity(lead + template.total_samples() + trail);
    samples.resize(lead, off_value);
    for (k, &amp) in amplitudes.iter().enumerate() {
        // amp carries sqrt(transmit_power) already
        let on_value = off_value + amp;
        for b in 0..template.bits_per_tag {
            let v = if template.bits[k * template.bits_per_tag + b] {
                on_value
            } else {
                off_value
            };
            samples.resize(samples.len() + spb, v);
        }
    }
    samples.resize(samples.len() + trail, off_value);

    if config.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, config.noise_sigma).expect("finite sigma");
        for s in samples.iter_mut() {
            *s = (*s + normal.sample(rng)).max(0.0);
        }
    }
    Ok(SampleTrace {
        samples,
        ground_truth_start: lead,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::collections::BTreeSet;

    fn noiseless_office() -> ScenarioConfig {
        let mut c = ScenarioConfig::office();
        c.noise_sigma = 0.0;
        c.multipath_sigma = 0.0;
        c
    }

    #[test]
    fn steps_respect_speed_and_arena() {
        let c = ScenarioConfig::office();
        let max_step = c.robot_speed * c.slot_interval; // 0.12 m
        for t in generate_trajectories(&c).unwrap() {
            assert_eq!(t.positions.len(), c.num_slots);
            for pair in t.positions.windows(2) {
                let dx = pair[1][0] - pair[0][0];
                let dy = pair[1][1] - pair[0][1];
                assert!((dx * dx + dy * dy).sqrt() <= max_step + 1e-9);
            }
            for p in &t.positions {
                assert!((0.0..=c.arena_width).contains(&p[0]));
                assert!((0.0..=c.arena_height).contains(&p[1]));
            }
        }
    }

    #[test]
    fn trajectories_keep_clear_of_every_tag() {
        let mut c = ScenarioConfig::office();
        c.num_slots = 500;
        c.rng_seed = 42;
        let tags = c.tag_positions();
        for t in generate_trajectories(&c).unwrap() {
            for p in &t.positions {
                for (k, tag) in tags.iter().enumerate() {
                    let dx = p[0] - tag[0];
                    let dy = p[1] - tag[1];
                    let d = (dx * dx + dy * dy).sqrt();
                    assert!(
                        d >= TAG_CLEARANCE - 1e-9,
                        "robot {} reaches {d:.4} m from tag {k}",
                        t.robot
                    );
                }
            }
        }
    }

    #[test]
    fn zero_speed_keeps_robots_in_place() {
        let mut c = ScenarioConfig::office();
        c.robot_speed = 0.0;
        for t in generate_trajectories(&c).unwrap() {
            assert!(t.positions.iter().all(|p| *p == t.positions[0]));
        }
    }

    #[test]
    fn trajectories_are_deterministic() {
        let c = ScenarioConfig::office();
        assert_eq!(
            generate_trajectories(&c).unwrap(),
            generate_trajectories(&c).unwrap()
        );
        let mut c2 = c.clone();
        c2.rng_seed = 1;
        assert_ne!(
            generate_trajectories(&c).unwrap(),
            generate_trajectories(&c2).unwrap()
        );
    }

    #[test]
    fn cramped_arena_fails_start_placement() {
        let mut c = ScenarioConfig::office();
        c.arena_width = 1e-6;
        c.arena_height = 1e-6;
        c.tag_offsets = vec![[1e-7, 0.0], [-1e-7, 0.0], [0.0, 1e-7], [0.0, -1e-7]];
        let err = generate_trajectories(&c).unwrap_err();
        assert!(err.to_string().contains("too small"), "{err}");
    }

    #[test]
    fn every_claimed_id_appears_once_per_slot() {
        let c = ScenarioConfig::office();
        let events = schedule_transmissions(&c, 3, &mut schedule_stream(&c, 3));
        let ids: Vec<usize> = events.iter().map(|e| e.claimed_id).collect();
        assert_eq!(ids, (0..c.num_ids()).collect::<Vec<_>>());
        for e in &events {
            if e.claimed_id < c.num_legit {
                assert_eq!(e.emitter, e.claimed_id);
            } else {
                assert!(e.emitter >= c.num_legit && e.emitter < c.num_robots());
            }
            assert_eq!(e.transmit_power, 1.0);
        }
    }

    #[test]
    fn basic_single_attacker_reuses_emitter_at_full_power() {
        let mut c = ScenarioConfig::office();
        c.num_attackers = 1;
        c.num_fake_ids = 2;
        let events = schedule_transmissions(&c, 0, &mut schedule_stream(&c, 0));
        let fakes: Vec<_> = events.iter().filter(|e| c.is_fake(e.claimed_id)).collect();
        assert_eq!(fakes.len(), 2);
        assert_eq!(fakes[0].emitter, fakes[1].emitter);
        assert!(fakes.iter().all(|e| e.transmit_power == 1.0));
    }

    #[test]
    fn colluding_partition_is_equal_and_disjoint() {
        let mut c = ScenarioConfig::office();
        c.attack_mode = AttackMode::Colluding;
        c.num_slots = 200;
        let mut saw_different_partitions = false;
        let mut first: Option<Vec<usize>> = None;
        for slot in 0..c.num_slots {
            let events = schedule_transmissions(&c, slot, &mut schedule_stream(&c, slot));
            let fakes: Vec<_> = events.iter().filter(|e| c.is_fake(e.claimed_id)).collect();
            assert_eq!(fakes.len(), 4);
            let mut per_emitter = std::collections::BTreeMap::<usize, BTreeSet<usize>>::new();
            for e in &fakes {
                per_emitter.entry(e.emitter).or_default().insert(e.claimed_id);
            }
            // two disjoint 2-ID subsets covering all four fake IDs
            assert_eq!(per_emitter.len(), 2);
            assert!(per_emitter.values().all(|s| s.len() == 2));
            let union: BTreeSet<usize> = per_emitter.values().flatten().copied().collect();
            assert_eq!(union.len(), 4);
            let emitters: Vec<usize> = fakes.iter().map(|e| e.emitter).collect();
            match &first {
                None => first = Some(emitters),
                Some(f) if *f != emitters => saw_different_partitions = true,
                _ => {}
            }
        }
        assert!(saw_different_partitions, "partition never changed across 200 slots");
    }

    #[test]
    fn some_emitter_always_holds_two_fakes_here() {
        // with 4 fake IDs over 2 attackers every mode gives each attacker >= 2
        for mode in [AttackMode::Basic, AttackMode::PowerScaling, AttackMode::Colluding] {
            let mut c = ScenarioConfig::office();
            c.attack_mode = mode;
            for slot in 0..20 {
                let events = schedule_transmissions(&c, slot, &mut schedule_stream(&c, slot));
                let mut counts = std::collections::BTreeMap::<usize, usize>::new();
                for e in events.iter().filter(|e| c.is_fake(e.claimed_id)) {
                    *counts.entry(e.emitter).or_default() += 1;
                }
                assert!(counts.values().any(|&n| n >= 2));
            }
        }
    }

    #[test]
    fn power_scaling_draws_are_roughly_uniform() {
        let mut c = ScenarioConfig::office();
        c.attack_mode = AttackMode::PowerScaling;
        c.num_slots = 1000;
        let mut counts = std::collections::BTreeMap::<u64, usize>::new();
        let mut total = 0usize;
        for slot in 0..c.num_slots {
            for e in schedule_transmissions(&c, slot, &mut schedule_stream(&c, slot)) {
                if c.is_fake(e.claimed_id) {
                    *counts.entry(e.transmit_power.to_bits()).or_default() += 1;
                    total += 1;
                }
            }
        }
        assert_eq!(counts.len(), 3);
        for (&bits, &n) in &counts {
            let p = f64::from_bits(bits);
            assert!(c.power_scale_set.contains(&p));
            let freq = n as f64 / total as f64;
            assert!(
                (freq - 1.0 / 3.0).abs() < 0.05,
                "power {p} frequency {freq:.3} strays from uniform"
            );
        }
    }

    #[test]
    fn reflected_power_follows_inverse_square_and_transmit_power() {
        let mut c = noiseless_office();
        c.tag_offsets = vec![[0.12, 0.0]];
        c.num_tags = 1;
        let tag = c.tag_positions()[0];
        let near = [tag[0] + 1.0, tag[1]];
        let far = [tag[0] + 2.0, tag[1]];
        let a_near = tag_reflection_amplitude(&c, near, 0, 1.0).unwrap();
        let a_far = tag_reflection_amplitude(&c, far, 0, 1.0).unwrap();
        // doubling emitter-tag distance quarters the reflected power
        assert_relative_eq!(a_near * a_near / (a_far * a_far), 4.0, max_relative = 1e-12);
        // halving transmit power exactly halves reflected power
        let a_half = tag_reflection_amplitude(&c, near, 0, 0.5).unwrap();
        assert_relative_eq!(a_half * a_half, a_near * a_near / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn reflected_amplitude_decreases_with_distance() {
        let c = noiseless_office();
        let tag = c.tag_positions()[0];
        let mut last = f64::INFINITY;
        for d in [0.05, 0.2, 0.5, 1.0, 2.0] {
            let amp = tag_reflection_amplitude(&c, [tag[0] + d, tag[1]], 0, 1.0).unwrap();
            assert!(amp < last, "amplitude not decreasing at distance {d}");
            last = amp;
        }
    }

    #[test]
    fn emitter_on_top_of_tag_is_rejected() {
        let c = noiseless_office();
        let tag = c.tag_positions()[0];
        let event = TransmissionEvent {
            slot: 0,
            claimed_id: 0,
            emitter: 0,
            transmit_power: 1.0,
        };
        let err = synthesize_received_signal(
            &event,
            [tag[0] + 0.001, tag[1]],
            &c,
            &mut trace_stream(&c, 0, 0),
        )
        .unwrap_err();
        match err {
            Error::TagSingularity { tag: 0, .. } => {}
            other => panic!("expected TagSingularity, got {other:?}"),
        }
    }

    #[test]
    fn noiseless_quiet_samples_equal_direct_path_exactly() {
        let c = noiseless_office();
        let template = BitTemplate::for_config(&c);
        let event = TransmissionEvent {
            slot: 2,
            claimed_id: 1,
            emitter: 1,
            transmit_power: 1.0,
        };
        let trace = synthesize_received_signal(
            &event,
            [1.0, 1.0],
            &c,
            &mut trace_stream(&c, 2, 1),
        )
        .unwrap();
        let start = trace.ground_truth_start;
        assert!(trace.samples.len() >= start + template.total_samples());
        for (i, &s) in trace.samples.iter().enumerate() {
            let in_burst = i >= start && i < start + template.total_samples();
            let reflecting = in_burst && template.bit_at(i - start);
            if reflecting {
                assert!(s > DIRECT_PATH_AMPLITUDE);
            } else {
                assert_eq!(s, DIRECT_PATH_AMPLITUDE, "sample {i} off the direct path");
            }
        }
    }

    #[test]
    fn traces_are_bit_identical_across_runs() {
        let c = ScenarioConfig::office(); // noise and multipath on
        let event = TransmissionEvent {
            slot: 5,
            claimed_id: 3,
            emitter: 2,
            transmit_power: 0.6,
        };
        let a = synthesize_received_signal(&event, [2.0, 3.0], &c, &mut trace_stream(&c, 5, 3))
            .unwrap();
        let b = synthesize_received_signal(&event, [2.0, 3.0], &c, &mut trace_stream(&c, 5, 3))
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn quadrupled_transmit_power_doubles_amplitudes_exactly() {
        // sqrt(4) = 2 is a power of two, so the scaling survives bitwise
        let c = noiseless_office();
        let base = TransmissionEvent {
            slot: 0,
            claimed_id: 2,
            emitter: 2,
            transmit_power: 1.0,
        };
        let boosted = TransmissionEvent {
            transmit_power: 4.0,
            ..base
        };
        let pos = [1.5, 2.0];
        let a = synthesize_received_signal(&base, pos, &c, &mut trace_stream(&c, 0, 2)).unwrap();
        let b = synthesize_received_signal(&boosted, pos, &c, &mut trace_stream(&c, 0, 2)).unwrap();
        assert_eq!(a.ground_truth_start, b.ground_truth_start);
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert_eq!(2.0 * x, *y);
        }
    }
}
