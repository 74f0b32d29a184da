//! Visual-cue trajectories and positional conditioning features.

mod encoder;
mod features;

pub use encoder::{encode_positions, EncoderConfig, PositionalEmbedding, PositionalEncoder};
pub use features::{fourier_features, modulate_mask, FourierConfig, FourierFeatures, MASK_EPSILON};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A detected sound-source box in one video frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisualCue {
    #[serde(rename = "frame")]
    pub frame_index: usize,
    /// Horizontal box center in pixels.
    #[serde(rename = "x")]
    pub box_center_x: f64,
    #[serde(rename = "width")]
    pub frame_width: f64,
    #[serde(rename = "height")]
    pub frame_height: f64,
    /// Mean depth inside the box.
    pub depth_m: f64,
}

impl VisualCue {
    pub fn validate(&self) -> Result<()> {
        if !(self.frame_width > 0.0) {
            return Err(Error::validation("frame width must be positive"));
        }
        if !(self.box_center_x >= 0.0 && self.box_center_x <= self.frame_width) {
            return Err(Error::validation(format!(
                "box center {} outside [0, {}]",
                self.box_center_x, self.frame_width
            )));
        }
        if !(self.depth_m > 0.0) {
            return Err(Error::validation(format!("depth {} m must be positive", self.depth_m)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub depth_m: f64,
    /// 0 is hard left, 90 center, 180 hard right.
    pub azimuth_deg: f64,
    pub active: bool,
}

/// Per-video-frame source position and activity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    fps: f64,
    points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn new(fps: f64, points: Vec<TrajectoryPoint>) -> Result<Self> {
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::validation("fps must be positive"));
        }
        if points.is_empty() {
            return Err(Error::validation("trajectory needs at least one frame"));
        }
        for (i, p) in points.iter().enumerate() {
            if !(0.0..=180.0).contains(&p.azimuth_deg) {
                return Err(Error::validation(format!(
                    "frame {i}: azimuth {} outside [0, 180]",
                    p.azimuth_deg
                )));
            }
            if p.active && !(p.depth_m > 0.0) {
                return Err(Error::validation(format!(
                    "frame {i}: active frame needs positive depth"
                )));
            }
        }
        Ok(Self { fps, points })
    }

    /// A motionless, fully active source.
    pub fn constant(fps: f64, frames: usize, azimuth_deg: f64, depth_m: f64) -> Result<Self> {
        let p = TrajectoryPoint {
            depth_m,
            azimuth_deg,
            active: true,
        };
        Self::new(fps, vec![p; frames])
    }

    /// A fully active source moving linearly between two positions.
    pub fn linear(fps: f64, frames: usize, start: (f64, f64), end: (f64, f64)) -> Result<Self> {
        let span = frames.saturating_sub(1).max(1) as f64;
        let points = (0..frames)
            .map(|t| {
                let u = t as f64 / span;
                TrajectoryPoint {
                    azimuth_deg: start.0 + (end.0 - start.0) * u,
                    depth_m: start.1 + (end.1 - start.1) * u,
                    active: true,
                }
            })
            .collect();
        Self::new(fps, points)
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.points.len() as f64 / self.fps
    }

    pub fn points(&self) -> &[TrajectoryPoint] {
        &self.points
    }

    pub fn activation(&self) -> Vec<u8> {
        self.points.iter().map(|p| p.active as u8).collect()
    }

    /// Frame containing time `t`, clamped to the trajectory.
    pub fn frame_at(&self, t: f64) -> usize {
        ((t * self.fps).floor().max(0.0) as usize).min(self.points.len() - 1)
    }

    /// Position at time `t`, linearly interpolated between frame centers.
    /// Activity is taken from the frame containing `t`.
    pub fn sample_at(&self, t: f64) -> TrajectoryPoint {
        let pos = (t * self.fps - 0.5).max(0.0);
        let i = (pos.floor() as usize).min(self.points.len() - 1);
        let j = (i + 1).min(self.points.len() - 1);
        let u = (pos - i as f64).clamp(0.0, 1.0);
        let (a, b) = (self.points[i], self.points[j]);
        TrajectoryPoint {
            depth_m: a.depth_m + (b.depth_m - a.depth_m) * u,
            azimuth_deg: a.azimuth_deg + (b.azimuth_deg - a.azimuth_deg) * u,
            active: self.points[self.frame_at(t)].active,
        }
    }
}

/// Horizontal angle of a cue: `atan(lateral_offset / depth)` in degrees,
/// shifted so 90 is straight ahead. `ppm` converts pixel offsets at the
/// source plane to meters.
pub fn azimuth_from_cue(cue: &VisualCue, ppm: f64) -> Result<f64> {
    cue.validate()?;
    if !(ppm > 0.0) {
        return Err(Error::validation("pixels-per-meter must be positive"));
    }
    let offset = cue.box_center_x - cue.frame_width / 2.0;
    // Evaluated on the right half-plane and mirrored so that
    // azimuth(x) + azimuth(W - x) is exactly 180.
    let right = 90.0 + (offset.abs() / ppm / cue.depth_m).atan().to_degrees();
    Ok(if offset < 0.0 { 180.0 - right } else { right })
}

/// Expands keyframe cues to one point per video frame by linear
/// interpolation, holding the first/last keyframe outside their range.
/// Every frame is marked active.
pub fn interpolate_trajectory(cues: &[VisualCue], fps: f64, total_frames: usize, ppm: f64) -> Result<Trajectory> {
    if cues.is_empty() {
        return Err(Error::validation("no cues"));
    }
    for pair in cues.windows(2) {
        if pair[1].frame_index <= pair[0].frame_index {
            return Err(Error::validation(format!(
                "cue frames must strictly increase ({} then {})",
                pair[0].frame_index, pair[1].frame_index
            )));
        }
    }
    if let Some(last) = cues.last() {
        if last.frame_index >= total_frames {
            return Err(Error::validation(format!(
                "cue frame {} beyond trajectory length {total_frames}",
                last.frame_index
            )));
        }
    }
    let keys: Vec<(usize, f64, f64)> = cues
        .iter()
        .map(|c| Ok((c.frame_index, c.depth_m, azimuth_from_cue(c, ppm)?)))
        .collect::<Result<_>>()?;

    let mut points = Vec::with_capacity(total_frames);
    let mut k = 0;
    for t in 0..total_frames {
        while k + 1 < keys.len() && keys[k + 1].0 <= t {
            k += 1;
        }
        let (f0, d0, a0) = keys[k];
        let (depth_m, azimuth_deg) = if t <= f0 || k + 1 == keys.len() {
            (d0, a0)
        } else {
            let (f1, d1, a1) = keys[k + 1];
            let u = (t - f0) as f64 / (f1 - f0) as f64;
            (d0 + (d1 - d0) * u, a0 + (a1 - a0) * u)
        };
        points.push(TrajectoryPoint {
            depth_m,
            azimuth_deg,
            active: true,
        });
    }
    Trajectory::new(fps, points)
}

/// Sets each frame's activity flag from a 0/1 vector. Positions are kept;
/// inactive frames are suppressed later at feature level.
pub fn apply_activation(traj: &Trajectory, activation: &[u8]) -> Result<Trajectory> {
    if activation.len() != traj.len() {
        return Err(Error::validation(format!(
            "activation length {} != trajectory length {}",
            activation.len(),
            traj.len()
        )));
    }
    let points = traj
        .points
        .iter()
        .zip(activation)
        .map(|(p, &c)| TrajectoryPoint { active: c != 0, ..*p })
        .collect();
    Ok(Trajectory { fps: traj.fps, points })
}

/// On-disk trajectory description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFile {
    #[serde(default = "crate::schema_version")]
    pub schema_version: u32,
    pub fps: f64,
    /// Defaults to a quarter of the first cue's frame width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ppm: Option<f64>,
    pub cues: Vec<VisualCue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<Vec<u8>>,
    /// Trajectory length; defaults to the activation length, or one past
    /// the last cue.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_frames: Option<usize>,
}

impl TrajectoryFile {
    pub fn build(&self) -> Result<Trajectory> {
        let first = self
            .cues
            .first()
            .ok_or_else(|| Error::validation("trajectory file has no cues"))?;
        let ppm = self.ppm.unwrap_or(first.frame_width / 4.0);
        let total = self
            .total_frames
            .or(self.activation.as_ref().map(Vec::len))
            .unwrap_or_else(|| self.cues.last().map_or(1, |c| c.frame_index + 1));
        let traj = interpolate_trajectory(&self.cues, self.fps, total, ppm)?;
        match &self.activation {
            Some(act) => apply_activation(&traj, act),
            None => Ok(traj),
        }
    }

    /// Extends the trajectory (holding the last position) so it spans at
    /// least `duration_s` seconds.
    pub fn build_for_duration(&self, duration_s: f64) -> Result<Trajectory> {
        let needed = (duration_s * self.fps - 1e-9).ceil().max(1.0) as usize;
        let mut file = self.clone();
        if file.total_frames.is_none() && file.activation.is_none() {
            let last = file.cues.last().map_or(0, |c| c.frame_index + 1);
            file.total_frames = Some(needed.max(last));
        }
        file.build()
    }
}
