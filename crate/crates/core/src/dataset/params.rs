use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::RoomPreset;

/// One of five frontal regions, as an offset from straight ahead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AzimuthRegion {
    FarLeft,
    Left,
    Center,
    Right,
    FarRight,
}

impl AzimuthRegion {
    pub const ALL: [AzimuthRegion; 5] = [
        AzimuthRegion::FarLeft,
        AzimuthRegion::Left,
        AzimuthRegion::Center,
        AzimuthRegion::Right,
        AzimuthRegion::FarRight,
    ];

    pub fn offset_deg(self) -> f64 {
        match self {
            AzimuthRegion::FarLeft => -45.0,
            AzimuthRegion::Left => -15.0,
            AzimuthRegion::Center => 0.0,
            AzimuthRegion::Right => 15.0,
            AzimuthRegion::FarRight => 45.0,
        }
    }

    /// Absolute azimuth, 0 = hard left, 90 = center.
    pub fn azimuth_deg(self) -> f64 {
        90.0 + self.offset_deg()
    }

    pub fn word(self) -> &'static str {
        match self {
            AzimuthRegion::FarLeft => "far left",
            AzimuthRegion::Left => "left",
            AzimuthRegion::Center => "center",
            AzimuthRegion::Right => "right",
            AzimuthRegion::FarRight => "far right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthZone {
    Near,
    Mid,
    Far,
}

impl DepthZone {
    pub const ALL: [DepthZone; 3] = [DepthZone::Near, DepthZone::Mid, DepthZone::Far];

    pub fn word(self) -> &'static str {
        match self {
            DepthZone::Near => "close",
            DepthZone::Mid => "mid-distance",
            DepthZone::Far => "distant",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Motion {
    Static,
    Dynamic,
}

/// Reverb presets available to dataset samples.
pub const DATASET_PRESETS: [RoomPreset; 4] = [
    RoomPreset::Room,
    RoomPreset::Chamber,
    RoomPreset::Hall,
    RoomPreset::Plate,
];

/// A free categorical attribute drawn alongside the spatial parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Categorical {
    pub name: String,
    pub values: Vec<String>,
    pub weights: Vec<f64>,
}

/// Sampling weights and ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Distribution {
    pub dynamic_fraction: f64,
    /// Weights in far left, left, center, right, far right order.
    pub azimuth_weights: [f64; 5],
    /// Weights in near, mid, far order.
    pub depth_weights: [f64; 3],
    /// Weights in room, chamber, hall, plate order.
    pub preset_weights: [f64; 4],
    pub near_min_m: f64,
    pub mid_min_m: f64,
    pub far_min_m: f64,
    pub far_max_m: f64,
    pub target_s: (f64, f64),
    pub categories: Vec<Categorical>,
}

impl Default for Distribution {
    fn default() -> Self {
        Self {
            dynamic_fraction: 0.64,
            azimuth_weights: [0.2; 5],
            depth_weights: [1.0 / 3.0; 3],
            preset_weights: [0.25; 4],
            near_min_m: 0.5,
            mid_min_m: 2.0,
            far_min_m: 5.0,
            far_max_m: 10.0,
            target_s: (8.0, 10.0),
            categories: Vec::new(),
        }
    }
}

fn check_weights(name: &str, w: &[f64]) -> Result<()> {
    if w.is_empty() || w.iter().any(|v| !(*v >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
        return Err(Error::validation(format!(
            "{name} weights must be non-negative and sum to 1"
        )));
    }
    Ok(())
}

impl Distribution {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.dynamic_fraction) {
            return Err(Error::validation("dynamic fraction must lie in [0, 1]"));
        }
        check_weights("azimuth", &self.azimuth_weights)?;
        check_weights("depth", &self.depth_weights)?;
        check_weights("preset", &self.preset_weights)?;
        for c in &self.categories {
            if c.values.len() != c.weights.len() {
                return Err(Error::validation(format!(
                    "category {} needs one weight per value",
                    c.name
                )));
            }
            check_weights(&c.name, &c.weights)?;
        }
        if !(0.0 < self.near_min_m
            && self.near_min_m < self.mid_min_m
            && self.mid_min_m < self.far_min_m
            && self.far_min_m < self.far_max_m)
        {
            return Err(Error::validation("depth zone bounds must increase"));
        }
        if !(self.target_s.0 > 0.0 && self.target_s.1 >= self.target_s.0) {
            return Err(Error::validation("target duration range is invalid"));
        }
        Ok(())
    }

    pub fn zone_range(&self, zone: DepthZone) -> (f64, f64) {
        match zone {
            DepthZone::Near => (self.near_min_m, self.mid_min_m),
            DepthZone::Mid => (self.mid_min_m, self.far_min_m),
            DepthZone::Far => (self.far_min_m, self.far_max_m),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub azimuth_region: AzimuthRegion,
    pub depth_zone: DepthZone,
    pub depth_m: f64,
}

impl Position {
    pub fn azimuth_deg(&self) -> f64 {
        self.azimuth_region.azimuth_deg()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleParams {
    pub seed: u64,
    pub start: Position,
    pub motion: Motion,
    /// End point of a moving source, in a different region or zone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamic_end: Option<Position>,
    pub reverb_preset: RoomPreset,
    pub target_s: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub categories: BTreeMap<String, String>,
}

impl SampleParams {
    pub fn validate(&self) -> Result<()> {
        match (self.motion, &self.dynamic_end) {
            (Motion::Static, None) => Ok(()),
            (Motion::Dynamic, Some(end))
                if (end.azimuth_region, end.depth_zone) != (self.start.azimuth_region, self.start.depth_zone) =>
            {
                Ok(())
            }
            (Motion::Dynamic, _) => Err(Error::validation("a moving source needs a different end position")),
            (Motion::Static, Some(_)) => Err(Error::validation("a static source has no end position")),
        }
    }

    pub fn end(&self) -> Position {
        self.dynamic_end.unwrap_or(self.start)
    }
}

fn pick<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    WeightedIndex::new(weights).expect("validated weights").sample(rng)
}

fn position<R: Rng>(rng: &mut R, dist: &Distribution) -> Position {
    let region = AzimuthRegion::ALL[pick(rng, &dist.azimuth_weights)];
    let zone = DepthZone::ALL[pick(rng, &dist.depth_weights)];
    let (lo, hi) = dist.zone_range(zone);
    Position {
        azimuth_region: region,
        depth_zone: zone,
        depth_m: rng.random_range(lo..hi),
    }
}

/// Draws spatial parameters deterministically from `seed`.
pub fn sample_params(seed: u64, dist: &Distribution) -> Result<SampleParams> {
    dist.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let motion = if rng.random_bool(dist.dynamic_fraction) {
        Motion::Dynamic
    } else {
        Motion::Static
    };
    let start = position(&mut rng, dist);
    let preset = DATASET_PRESETS[pick(&mut rng, &dist.preset_weights)];
    let (lo, hi) = dist.target_s;
    let target_s = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let dynamic_end = match motion {
        Motion::Static => None,
        Motion::Dynamic => loop {
            let end = position(&mut rng, dist);
            if (end.azimuth_region, end.depth_zone) != (start.azimuth_region, start.depth_zone) {
                break Some(end);
            }
        },
    };
    let categories = dist
        .categories
        .iter()
        .map(|c| (c.name.clone(), c.values[pick(&mut rng, &c.weights)].clone()))
        .collect();
    Ok(SampleParams {
        seed,
        start,
        motion,
        dynamic_end,
        reverb_preset: preset,
        target_s,
        categories,
    })
}

/// "<tag>, <region>, <zone>[, moving <from>→<to>], <preset> reverb".
pub fn caption_for(tag: &str, params: &SampleParams) -> String {
    let s = &params.start;
    let mut caption = format!("{}, {}, {}", tag.trim(), s.azimuth_region.word(), s.depth_zone.word());
    if let Some(e) = &params.dynamic_end {
        let (from, to) = if e.azimuth_region != s.azimuth_region {
            (s.azimuth_region.word(), e.azimuth_region.word())
        } else {
            (s.depth_zone.word(), e.depth_zone.word())
        };
        caption.push_str(&format!(", moving {from}→{to}"));
    }
    caption.push_str(&format!(", {} reverb", params.reverb_preset.name()));
    caption
}
