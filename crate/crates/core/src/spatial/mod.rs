//! Mono-to-stereo spatial rendering: interaural time difference,
//! constant-power panning with distance attenuation, and a Schroeder
//! reverberator.

mod render;
mod reverb;

pub use render::{render_event, render_event_with, RenderConfig};
pub use reverb::schroeder_reverb;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_SOUND_M_S: f64 = 343.0;
pub const DEFAULT_INTERAURAL_M: f64 = 0.17;
pub const INTERAURAL_RANGE_M: (f64, f64) = (0.16, 0.18);
pub const DEFAULT_WET_RATIO: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoomPreset {
    Dry,
    Room,
    Chamber,
    Hall,
    Plate,
}

impl RoomPreset {
    pub const ALL: [RoomPreset; 5] = [
        RoomPreset::Dry,
        RoomPreset::Room,
        RoomPreset::Chamber,
        RoomPreset::Hall,
        RoomPreset::Plate,
    ];

    pub fn rt60_s(self) -> f64 {
        match self {
            RoomPreset::Dry => 0.0,
            RoomPreset::Room => 0.4,
            RoomPreset::Chamber => 0.8,
            RoomPreset::Hall => 1.5,
            RoomPreset::Plate => 1.1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RoomPreset::Dry => "dry",
            RoomPreset::Room => "room",
            RoomPreset::Chamber => "chamber",
            RoomPreset::Hall => "hall",
            RoomPreset::Plate => "plate",
        }
    }
}

/// Acoustic environment for rendering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RoomSpecFile")]
pub struct RoomSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<RoomPreset>,
    pub rt60_s: f64,
    pub wet_ratio: f64,
    pub interaural_m: f64,
    /// Lifts the 16-18 cm check on `interaural_m`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_any_interaural: bool,
}

impl RoomSpec {
    pub fn dry() -> Self {
        Self::preset(RoomPreset::Dry)
    }

    pub fn preset(preset: RoomPreset) -> Self {
        Self {
            preset: Some(preset),
            rt60_s: preset.rt60_s(),
            wet_ratio: if preset == RoomPreset::Dry {
                0.0
            } else {
                DEFAULT_WET_RATIO
            },
            interaural_m: DEFAULT_INTERAURAL_M,
            allow_any_interaural: false,
        }
    }

    pub fn custom(rt60_s: f64, wet_ratio: f64) -> Self {
        Self {
            preset: None,
            rt60_s,
            wet_ratio,
            interaural_m: DEFAULT_INTERAURAL_M,
            allow_any_interaural: false,
        }
    }

    pub fn is_dry(&self) -> bool {
        self.rt60_s == 0.0 || self.wet_ratio == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rt60_s >= 0.0 && self.rt60_s.is_finite()) {
            return Err(Error::validation("rt60 must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.wet_ratio) {
            return Err(Error::validation("wet ratio must lie in [0, 1]"));
        }
        let (lo, hi) = INTERAURAL_RANGE_M;
        if !(self.interaural_m > 0.0) {
            return Err(Error::validation("interaural distance must be positive"));
        }
        if !self.allow_any_interaural && !(lo..=hi).contains(&self.interaural_m) {
            return Err(Error::validation(format!(
                "interaural distance {} m outside [{lo}, {hi}] m",
                self.interaural_m
            )));
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct RoomSpecFile {
    preset: Option<RoomPreset>,
    rt60_s: Option<f64>,
    wet_ratio: Option<f64>,
    interaural_m: Option<f64>,
    #[serde(default)]
    allow_any_interaural: bool,
}

impl TryFrom<RoomSpecFile> for RoomSpec {
    type Error = Error;

    fn try_from(f: RoomSpecFile) -> Result<Self> {
        let base = match (f.preset, f.rt60_s) {
            (Some(p), _) => RoomSpec::preset(p),
            (None, Some(rt)) => RoomSpec::custom(rt, DEFAULT_WET_RATIO),
            (None, None) => {
                return Err(Error::validation("room needs a preset or rt60_s"));
            }
        };
        let spec = RoomSpec {
            rt60_s: f.rt60_s.unwrap_or(base.rt60_s),
            wet_ratio: f.wet_ratio.unwrap_or(base.wet_ratio),
            interaural_m: f.interaural_m.unwrap_or(base.interaural_m),
            allow_any_interaural: f.allow_any_interaural,
            ..base
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Signed interaural time difference in seconds. Positive values mean the
/// left ear hears the source later (source on the right).
pub fn itd_of(azimuth_deg: f64, interaural_m: f64) -> f64 {
    interaural_m / SPEED_OF_SOUND_M_S * (azimuth_deg - 90.0).to_radians().sin()
}

/// Constant-power pan law with 1/r attenuation beyond `d_ref`.
pub fn pan_gains(azimuth_deg: f64, depth_m: f64, d_ref: f64) -> (f64, f64) {
    let psi = azimuth_deg * std::f64::consts::PI / 360.0;
    let distance = d_ref / depth_m.max(d_ref);
    (psi.cos() * distance, psi.sin() * distance)
}

/// Inverse of [`itd_of`], clamped to [0, 180] degrees.
pub fn azimuth_from_itd(itd_s: f64, interaural_m: f64) -> f64 {
    let max = interaural_m / SPEED_OF_SOUND_M_S;
    90.0 + (itd_s / max).clamp(-1.0, 1.0).asin().to_degrees()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn itd_examples() {
        assert_eq!(itd_of(90.0, 0.17), 0.0);
        assert!((itd_of(180.0, 0.17) * 1e6 - 495.6).abs() < 0.05);
        assert!((itd_of(135.0, 0.17) * 1e6 - 350.5).abs() < 0.05);
        assert!(itd_of(45.0, 0.17) < 0.0);
    }

    #[test]
    fn itd_inverts() {
        for az in [0.0, 30.0, 75.0, 90.0, 120.0, 180.0] {
            assert!((azimuth_from_itd(itd_of(az, 0.17), 0.17) - az).abs() < 1e-6);
        }
    }

    #[test]
    fn pan_examples() {
        let (l, r) = pan_gains(90.0, 1.0, 1.0);
        let k = std::f64::consts::FRAC_1_SQRT_2;
        assert!((l - k).abs() < 1e-12 && (r - k).abs() < 1e-12);
        let (l, r) = pan_gains(0.0, 1.0, 1.0);
        assert!((l - 1.0).abs() < 1e-12 && r.abs() < 1e-12);
        let (l, r) = pan_gains(90.0, 2.0, 1.0);
        assert!((l - 0.3536).abs() < 1e-4 && (r - 0.3536).abs() < 1e-4);
    }

    #[test]
    fn room_json_forms() {
        let hall: RoomSpec = serde_json::from_str(r#"{"preset": "hall"}"#).unwrap();
        assert_eq!(hall.rt60_s, 1.5);
        assert_eq!(hall.wet_ratio, DEFAULT_WET_RATIO);
        let custom: RoomSpec =
            serde_json::from_str(r#"{"rt60_s": 0.7, "wet_ratio": 0.4, "interaural_m": 0.16}"#).unwrap();
        assert_eq!((custom.rt60_s, custom.wet_ratio, custom.interaural_m), (0.7, 0.4, 0.16));
        assert!(serde_json::from_str::<RoomSpec>(r#"{"rt60_s": 0.7, "interaural_m": 0.3}"#).is_err());
        assert!(serde_json::from_str::<RoomSpec>(
            r#"{"rt60_s": 0.7, "interaural_m": 0.3, "allow_any_interaural": true}"#
        )
        .is_ok());
        assert!(serde_json::from_str::<RoomSpec>(r#"{"wet_ratio": 0.2}"#).is_err());
        let back: RoomSpec = serde_json::from_str(&serde_json::to_string(&hall).unwrap()).unwrap();
        assert_eq!(back, hall);
    }
}
