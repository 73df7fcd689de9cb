//! Scenario description: arena, robot cast, attack mode, tags, noise, seed.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the attackers fabricate fake identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackMode {
    /// Each attacker broadcasts a fixed set of fake IDs at full power.
    Basic,
    /// Like basic, but every fake-ID event draws a random transmit-power
    /// multiplier from `power_scale_set`.
    PowerScaling,
    /// The fake IDs are re-partitioned evenly across the attackers at every
    /// slot, so no fake ID sticks to one emitter.
    Colluding,
}

impl AttackMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AttackMode::Basic => "basic",
            AttackMode::PowerScaling => "power_scaling",
            AttackMode::Colluding => "colluding",
        }
    }
}

fn default_samples_per_bit() -> usize {
    50
}

fn default_bits_per_tag() -> usize {
    16
}

/// Full description of one simulated trial.
///
/// Claimed identities are numbered 0..num_legit for legitimate robots and
/// num_legit..num_legit+num_fake_ids for fake ones. Physical robots are
/// numbered 0..num_legit for legitimate robots and onwards for attackers.
/// The receiver sits at the arena center with the backscatter tags at fixed
/// offsets around it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub arena_width: f64,
    pub arena_height: f64,
    pub num_legit: usize,
    pub num_attackers: usize,
    pub num_fake_ids: usize,
    pub attack_mode: AttackMode,
    /// Meters per second.
    pub robot_speed: f64,
    /// Seconds between successive transmissions of each ID.
    pub slot_interval: f64,
    pub num_slots: usize,
    pub num_tags: usize,
    /// 2-D offsets of each tag from the receiver, meters.
    pub tag_offsets: Vec<[f64; 2]>,
    /// Per-tag reflection gain; reflected power is
    /// transmit_power * tag_gain / (d_kt^2 * d_kr^2).
    pub tag_gain: f64,
    /// Std-dev of additive amplitude noise at the receiver.
    pub noise_sigma: f64,
    /// Transmit-power multipliers available to the power-scaling attack.
    pub power_scale_set: Vec<f64>,
    pub rng_seed: u64,
    #[serde(default = "default_samples_per_bit")]
    pub samples_per_bit: usize,
    #[serde(default = "default_bits_per_tag")]
    pub bits_per_tag: usize,
    /// Relative std-dev of a per-slot perturbation of each tag's reflected
    /// amplitude; emulates richer multipath. 0 disables it.
    #[serde(default)]
    pub multipath_sigma: f64,
}

impl ScenarioConfig {
    /// Desk-scale office preset: 4.5 m x 5.5 m room.
    pub fn office() -> Self {
        ScenarioConfig {
            arena_width: 4.5,
            arena_height: 5.5,
            num_legit: 2,
            num_attackers: 2,
            num_fake_ids: 4,
            attack_mode: AttackMode::Basic,
            robot_speed: 0.2,
            slot_interval: 0.6,
            num_slots: 60,
            num_tags: 4,
            // spread around the room: robots at different spots then see
            // clearly different per-tag distance mixes, which is the whole
            // fingerprint
            tag_offsets: vec![[1.8, 0.0], [-1.8, 0.0], [0.0, 1.8], [0.0, -1.8]],
            tag_gain: 3.24e-2,
            noise_sigma: 0.02,
            power_scale_set: vec![0.3, 0.6, 0.9],
            rng_seed: 0,
            samples_per_bit: default_samples_per_bit(),
            bits_per_tag: default_bits_per_tag(),
            multipath_sigma: 0.05,
        }
    }

    /// Open rooftop preset: 8 m x 10 m.
    pub fn rooftop() -> Self {
        ScenarioConfig {
            arena_width: 8.0,
            arena_height: 10.0,
            ..Self::office()
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ScenarioConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    /// Total physical robots: legitimate ones plus attackers.
    pub fn num_robots(&self) -> usize {
        self.num_legit + self.num_attackers
    }

    /// Total claimed identities: legitimate plus fake.
    pub fn num_ids(&self) -> usize {
        self.num_legit + self.num_fake_ids
    }

    pub fn is_fake(&self, claimed_id: usize) -> bool {
        claimed_id >= self.num_legit
    }

    pub fn receiver_position(&self) -> [f64; 2] {
        [self.arena_width / 2.0, self.arena_height / 2.0]
    }

    /// Absolute tag positions: receiver position plus each offset.
    pub fn tag_positions(&self) -> Vec<[f64; 2]> {
        let r = self.receiver_position();
        self.tag_offsets
            .iter()
            .map(|o| [r[0] + o[0], r[1] + o[1]])
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.arena_width > 0.0 && self.arena_width.is_finite()) {
            return fail(format!("arena_width must be positive, got {}", self.arena_width));
        }
        if !(self.arena_height > 0.0 && self.arena_height.is_finite()) {
            return fail(format!(
                "arena_height must be positive, got {}",
                self.arena_height
            ));
        }
        if !(self.robot_speed >= 0.0 && self.robot_speed.is_finite()) {
            return fail(format!(
                "robot_speed must be non-negative, got {}",
                self.robot_speed
            ));
        }
        if !(self.slot_interval > 0.0 && self.slot_interval.is_finite()) {
            return fail(format!(
                "slot_interval must be positive, got {}",
                self.slot_interval
            ));
        }
        if self.num_slots == 0 {
            return fail("num_slots must be at least 1".into());
        }
        if self.num_ids() == 0 {
            return fail("num_legit + num_fake_ids must be at least 1".into());
        }
        if self.num_fake_ids > 0 && self.num_attackers == 0 {
            return fail("num_attackers must be at least 1 when num_fake_ids > 0".into());
        }
        if self.attack_mode == AttackMode::Colluding {
            if self.num_attackers == 0 || self.num_fake_ids < self.num_attackers {
                return fail(format!(
                    "colluding mode needs num_fake_ids >= num_attackers >= 1, got {} and {}",
                    self.num_fake_ids, self.num_attackers
                ));
            }
            if self.num_fake_ids % self.num_attackers != 0 {
                return fail(format!(
                    "colluding mode needs num_fake_ids ({}) divisible by num_attackers ({})",
                    self.num_fake_ids, self.num_attackers
                ));
            }
        }
        if self.num_tags == 0 {
            return fail("num_tags must be at least 1".into());
        }
        if self.tag_offsets.len() != self.num_tags {
            return fail(format!(
                "tag_offsets has {} entries, num_tags is {}",
                self.tag_offsets.len(),
                self.num_tags
            ));
        }
        for (i, a) in self.tag_offsets.iter().enumerate() {
            if !(a[0].is_finite() && a[1].is_finite()) {
                return fail(format!("tag_offsets[{i}] is not finite"));
            }
            if a[0] == 0.0 && a[1] == 0.0 {
                return fail(format!("tag_offsets[{i}] coincides with the receiver"));
            }
            for (j, b) in self.tag_offsets.iter().enumerate().skip(i + 1) {
                if a == b {
                    return fail(format!("tag_offsets[{i}] and tag_offsets[{j}] are equal"));
                }
            }
        }
        let r = self.receiver_position();
        for (i, o) in self.tag_offsets.iter().enumerate() {
            let x = r[0] + o[0];
            let y = r[1] + o[1];
            if !(0.0..=self.arena_width).contains(&x) || !(0.0..=self.arena_height).contains(&y) {
                return fail(format!("tag_offsets[{i}] places the tag outside the arena"));
            }
        }
        if !(self.tag_gain > 0.0 && self.tag_gain.is_finite()) {
            return fail(format!("tag_gain must be positive, got {}", self.tag_gain));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return fail(format!(
                "noise_sigma must be non-negative, got {}",
                self.noise_sigma
            ));
        }
        if !(self.multipath_sigma >= 0.0 && self.multipath_sigma.is_finite()) {
            return fail(format!(
                "multipath_sigma must be non-negative, got {}",
                self.multipath_sigma
            ));
        }
        if self.power_scale_set.is_empty() {
            return fail("power_scale_set must be nonempty".into());
        }
        for (i, p) in self.power_scale_set.iter().enumerate() {
            if !(*p > 0.0 && p.is_finite()) {
                return fail(format!("power_scale_set[{i}] must be positive, got {p}"));
            }
        }
        if self.samples_per_bit == 0 {
            return fail("samples_per_bit must be at least 1".into());
        }
        if self.bits_per_tag < 2 {
            return fail("bits_per_tag must be at least 2 (need both bit values)".into());
        }
        Ok(())
    }
}

/// `count` tag offsets evenly spaced on a circle of `radius` meters around
/// the receiver, starting on the +x axis. Used by the tag-count sweep, where
/// a literal offset list per K would be noise.
pub fn ring_offsets(count: usize, radius: f64) -> Vec<[f64; 2]> {
    (0..count)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
            [radius * angle.cos(), radius * angle.sin()]
        })
        .collect()
}
