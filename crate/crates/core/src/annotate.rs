//! Sound-event onset/offset detection and per-frame activation vectors.

use serde::{Deserialize, Serialize};

use crate::audio::prep::windowed_rms;
use crate::audio::{AudioClip, GATE_HOP_S, GATE_WINDOW_S};
use crate::error::{Error, Result};

/// Absolute floor under the adaptive threshold.
pub const THRESHOLD_FLOOR_DB: f64 = -40.0;

/// A detected event, timestamps rounded to the millisecond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventSpan {
    pub start_s: f64,
    pub end_s: f64,
    /// Sample peak inside the span in dBFS.
    pub peak_db: f64,
}

impl EventSpan {
    pub fn new(start_s: f64, end_s: f64) -> Self {
        Self {
            start_s,
            end_s,
            peak_db: 0.0,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnsetConfig {
    /// MAD multiplier of the adaptive threshold.
    pub alpha: f64,
    pub min_gap_s: f64,
    pub min_len_s: f64,
}

impl Default for OnsetConfig {
    fn default() -> Self {
        Self {
            alpha: 3.0,
            min_gap_s: 0.2,
            min_len_s: 0.05,
        }
    }
}

fn round_ms(t: f64) -> f64 {
    (t * 1000.0).round() / 1000.0
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Detects events from the channel-mean RMS envelope (25 ms windows, 10 ms
/// hop) against `median + alpha * MAD`, floored at -40 dBFS. Runs closer
/// than `min_gap_s` are merged and spans shorter than `min_len_s` dropped.
pub fn detect_onsets(clip: &AudioClip, alpha: f64, min_gap_s: f64, min_len_s: f64) -> Result<Vec<EventSpan>> {
    if !(alpha > 0.0) {
        return Err(Error::validation("alpha must be positive"));
    }
    if clip.channels() > 2 {
        return Err(Error::validation("onset detection expects mono or stereo"));
    }
    if clip.is_empty() {
        return Ok(Vec::new());
    }
    let mono = clip.to_mono();
    let env = windowed_rms(&mono, GATE_WINDOW_S, GATE_HOP_S);
    let mut levels: Vec<f64> = env.iter().map(|e| e.2).collect();
    levels.sort_by(f64::total_cmp);
    let med = median(&levels);
    let mut dev: Vec<f64> = levels.iter().map(|v| (v - med).abs()).collect();
    dev.sort_by(f64::total_cmp);
    let mad = median(&dev);
    let threshold = (med + alpha * mad).max(10f64.powf(THRESHOLD_FLOOR_DB / 20.0));

    let fs = clip.sample_rate() as f64;
    let hop = (GATE_HOP_S * fs).round();
    let half = GATE_WINDOW_S * fs / 2.0;
    let samples = mono.samples();
    let mut spans = Vec::new();
    let mut run: Option<(usize, usize)> = None;
    for (i, &(_, _, level)) in env.iter().enumerate() {
        if level > threshold {
            run = Some(run.map_or((i, i), |(s, _)| (s, i)));
        } else if let Some(r) = run.take() {
            spans.push(r);
        }
    }
    spans.extend(run);

    let duration = clip.duration_s();
    let to_span = |(first, last): (usize, usize)| {
        // Window centers +/- half a hop.
        let start = ((env[first].0 as f64 + half - hop / 2.0) / fs).clamp(0.0, duration);
        let end = ((env[last].0 as f64 + half + hop / 2.0) / fs).min(duration);
        let b = ((end * fs) as usize).min(samples.len());
        let a = ((start * fs) as usize).min(b);
        let peak = samples[a..b].iter().fold(0.0f32, |m, s| m.max(s.abs()));
        EventSpan {
            start_s: round_ms(start),
            end_s: round_ms(end),
            peak_db: if peak > 0.0 {
                20.0 * (peak as f64).log10()
            } else {
                f64::NEG_INFINITY
            },
        }
    };
    let candidates: Vec<EventSpan> = spans.into_iter().map(to_span).collect();
    Ok(merge_intervals(&candidates, min_gap_s)?
        .into_iter()
        .filter(|s| s.duration_s() >= min_len_s - 1e-9)
        .collect())
}

pub fn detect_onsets_with(clip: &AudioClip, cfg: &OnsetConfig) -> Result<Vec<EventSpan>> {
    detect_onsets(clip, cfg.alpha, cfg.min_gap_s, cfg.min_len_s)
}

/// Joins neighbouring spans separated by less than `min_gap_s`.
pub fn merge_intervals(spans: &[EventSpan], min_gap_s: f64) -> Result<Vec<EventSpan>> {
    if spans.windows(2).any(|w| w[1].start_s < w[0].start_s) {
        return Err(Error::validation("spans must be sorted by start time"));
    }
    let mut out: Vec<EventSpan> = Vec::with_capacity(spans.len());
    for s in spans {
        match out.last_mut() {
            Some(prev) if s.start_s - prev.end_s < min_gap_s => {
                prev.end_s = prev.end_s.max(s.end_s);
                prev.peak_db = prev.peak_db.max(s.peak_db);
            }
            _ => out.push(*s),
        }
    }
    Ok(out)
}

/// `c_t = 1` iff the center of frame `t` lies inside a span.
pub fn activation_vector(spans: &[EventSpan], fps: f64, total_frames: usize) -> Vec<u8> {
    (0..total_frames)
        .map(|t| {
            let center = t as f64 / fps + 0.5 / fps;
            spans.iter().any(|s| center >= s.start_s && center < s.end_s) as u8
        })
        .collect()
}

/// Turns runs of active frames back into spans on frame boundaries.
pub fn spans_from_activation(activation: &[u8], fps: f64) -> Vec<EventSpan> {
    let mut out = Vec::new();
    let mut start = None;
    for (t, &c) in activation.iter().chain(std::iter::once(&0)).enumerate() {
        match (c != 0, start) {
            (true, None) => start = Some(t),
            (false, Some(s)) => {
                out.push(EventSpan::new(s as f64 / fps, t as f64 / fps));
                start = None;
            }
            _ => {}
        }
    }
    out
}

/// On-disk annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    #[serde(default = "crate::schema_version")]
    pub schema_version: u32,
    pub events: Vec<EventSpan>,
    pub fps: f64,
    pub activation: Vec<u8>,
}

impl Annotation {
    pub fn from_clip(clip: &AudioClip, fps: f64, cfg: &OnsetConfig) -> Result<Self> {
        if !(fps > 0.0) {
            return Err(Error::validation("fps must be positive"));
        }
        let events = detect_onsets_with(clip, cfg)?;
        let frames = (clip.duration_s() * fps - 1e-9).ceil().max(1.0) as usize;
        Ok(Self {
            schema_version: crate::SCHEMA_VERSION,
            activation: activation_vector(&events, fps, frames),
            events,
            fps,
        })
    }
}
