use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{itd_of, pan_gains, schroeder_reverb, RoomSpec};
use crate::audio::AudioClip;
use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

/// Block-rendering settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    /// Distance at which the distance gain is 1.
    pub d_ref_m: f64,
    pub block_s: f64,
    /// Ramp applied inside active regions next to inactive frames.
    pub fade_s: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            d_ref_m: 1.0,
            block_s: 0.020,
            fade_s: 0.010,
        }
    }
}

/// Renders a mono event to stereo along `traj` with default settings.
pub fn render_event(mono: &AudioClip, traj: &Trajectory, room: &RoomSpec) -> Result<AudioClip> {
    render_event_with(mono, traj, room, &RenderConfig::default())
}

/// Block-wise spatial rendering.
///
/// Half-overlapping Hann blocks are each rendered with the pan gains and
/// fractional ITD delay of the trajectory at the block center, then
/// overlap-added. Samples falling in inactive frames are silenced, with a
/// raised-cosine ramp inside the neighbouring active region. Reverb is
/// applied to the stereo sum.
pub fn render_event_with(
    mono: &AudioClip,
    traj: &Trajectory,
    room: &RoomSpec,
    cfg: &RenderConfig,
) -> Result<AudioClip> {
    if mono.channels() != 1 {
        return Err(Error::validation("render_event expects a mono clip"));
    }
    room.validate()?;
    let needed = (mono.duration_s() * traj.fps() - 1e-9).ceil().max(0.0) as usize;
    if traj.len() < needed {
        return Err(Error::validation(format!(
            "trajectory of {} frames shorter than the {needed} frames the clip spans",
            traj.len()
        )));
    }
    if !(cfg.d_ref_m > 0.0 && cfg.block_s > 0.0 && cfg.fade_s >= 0.0) {
        return Err(Error::validation("invalid render configuration"));
    }

    let fs = mono.sample_rate() as f64;
    let x = mono.channel_f64(0);
    let len = x.len();
    let hop = ((cfg.block_s * fs / 2.0).round() as usize).max(1);
    let block = 2 * hop;
    let window: Vec<f64> = (0..block)
        .map(|i| (PI * i as f64 / block as f64).sin().powi(2))
        .collect();

    let mut left = vec![0.0; len];
    let mut right = vec![0.0; len];
    for k in 0..=len.div_ceil(hop) {
        let center = k * hop;
        let p = traj.sample_at(center as f64 / fs);
        let (gl, gr) = pan_gains(p.azimuth_deg, p.depth_m, cfg.d_ref_m);
        let itd = itd_of(p.azimuth_deg, room.interaural_m) * fs;
        let (dl, dr) = (itd.max(0.0), (-itd).max(0.0));
        let start = center as isize - hop as isize;
        for (i, w) in window.iter().enumerate() {
            let n = start + i as isize;
            if n < 0 || n as usize >= len {
                continue;
            }
            let n = n as usize;
            left[n] += w * gl * read_fractional(&x, n as f64 - dl);
            right[n] += w * gr * read_fractional(&x, n as f64 - dr);
        }
    }

    let envelope = activity_envelope(traj, len, fs, cfg.fade_s);
    for n in 0..len {
        left[n] *= envelope[n];
        right[n] *= envelope[n];
    }

    let stereo = AudioClip::from_channels_f64(mono.sample_rate(), &[left, right]);
    Ok(schroeder_reverb(&stereo, room))
}

/// Linear-interpolated read with zeros outside the buffer.
fn read_fractional(x: &[f64], pos: f64) -> f64 {
    if pos < 0.0 {
        return 0.0;
    }
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    let a = x.get(i).copied().unwrap_or(0.0);
    if frac == 0.0 {
        return a;
    }
    let b = x.get(i + 1).copied().unwrap_or(0.0);
    a + (b - a) * frac
}

/// Per-sample gain: 0 in inactive frames, ramping to 1 over `fade_s`
/// inside active regions.
fn activity_envelope(traj: &Trajectory, len: usize, fs: f64, fade_s: f64) -> Vec<f64> {
    let active: Vec<bool> = (0..len)
        .map(|n| traj.points()[traj.frame_at(n as f64 / fs)].active)
        .collect();
    if active.iter().all(|&a| a) {
        return vec![1.0; len];
    }
    let fade = (fade_s * fs).round();
    // Distance (in samples) to the nearest inactive sample on either side.
    let mut dist = vec![f64::INFINITY; len];
    let mut last = None;
    for n in 0..len {
        if !active[n] {
            last = Some(n);
        }
        if let Some(l) = last {
            dist[n] = (n - l) as f64;
        }
    }
    last = None;
    for n in (0..len).rev() {
        if !active[n] {
            last = Some(n);
        }
        if let Some(l) = last {
            dist[n] = dist[n].min((l - n) as f64);
        }
    }
    dist.into_iter()
        .map(|d| {
            if fade <= 0.0 {
                (d > 0.0) as u8 as f64
            } else {
                let u = (d / fade).min(1.0);
                0.5 - 0.5 * (PI * u).cos()
            }
        })
        .collect()
}
