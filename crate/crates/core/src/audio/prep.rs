//! Corpus preparation: silence gating, spectral-subtraction denoising and
//! crossfaded loop padding.

use std::f64::consts::FRAC_PI_2;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::stft::Stft;
use super::AudioClip;
use crate::diag::Diagnostics;
use crate::error::{Error, Result};

pub const GATE_WINDOW_S: f64 = 0.025;
pub const GATE_HOP_S: f64 = 0.010;
const GATE_MIN_SEGMENT_S: f64 = 0.050;
const LOOP_CROSSFADE_S: f64 = 0.050;

/// Short-term RMS (over all channels) of windows starting every hop.
/// Returns `(start_frame, end_frame, rms)` per window; the final windows
/// are truncated at the end of the clip.
pub(crate) fn windowed_rms(clip: &AudioClip, window_s: f64, hop_s: f64) -> Vec<(usize, usize, f64)> {
    let sr = clip.sample_rate() as f64;
    let win = ((window_s * sr).round() as usize).max(1);
    let hop = ((hop_s * sr).round() as usize).max(1);
    let frames = clip.frames();
    let ch = clip.channels();
    let s = clip.samples();
    let mut out = Vec::new();
    let mut start = 0;
    while start < frames {
        let end = (start + win).min(frames);
        let energy: f64 = s[start * ch..end * ch].iter().map(|&v| (v as f64) * (v as f64)).sum();
        let rms = (energy / ((end - start) * ch) as f64).sqrt();
        out.push((start, end, rms));
        start += hop;
    }
    out
}

/// Returns the `(start_s, end_s)` segments whose 25 ms RMS exceeds
/// `threshold_db` (dBFS). Segments shorter than 50 ms are dropped.
pub fn gate_silence(clip: &AudioClip, threshold_db: f64) -> Result<Vec<(f64, f64)>> {
    if !(threshold_db < 0.0) {
        return Err(Error::validation("gate threshold must be below 0 dBFS"));
    }
    let sr = clip.sample_rate() as f64;
    let threshold = 10f64.powf(threshold_db / 20.0);
    let mut segments: Vec<(usize, usize)> = Vec::new();
    let mut current: Option<(usize, usize)> = None;
    for (start, end, rms) in windowed_rms(clip, GATE_WINDOW_S, GATE_HOP_S) {
        if rms > threshold {
            current = Some(match current {
                Some((s, e)) if start <= e => (s, end.max(e)),
                Some(done) => {
                    segments.push(done);
                    (start, end)
                }
                None => (start, end),
            });
        } else if let Some(done) = current.take() {
            segments.push(done);
        }
    }
    segments.extend(current);
    Ok(segments
        .into_iter()
        .map(|(s, e)| (s as f64 / sr, e as f64 / sr))
        .filter(|(s, e)| e - s >= GATE_MIN_SEGMENT_S - 1e-9)
        .collect())
}

/// Spectral subtraction parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DenoiseConfig {
    pub window: usize,
    pub hop: usize,
    /// Over-subtraction factor applied to the noise estimate.
    pub over_subtraction: f64,
    /// Fraction of the original magnitude that always survives.
    pub spectral_floor: f64,
    /// Percentage of lowest-energy frames whose mean power forms the
    /// per-bin noise estimate.
    pub noise_percentile: f64,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            window: 1024,
            hop: 256,
            over_subtraction: 1.0,
            spectral_floor: 0.05,
            noise_percentile: 10.0,
        }
    }
}

/// Spectral-subtraction denoiser with default parameters.
///
/// `noise_floor_db` is the loudest broadband noise level (dBFS RMS) the
/// estimator may attribute to noise: per-bin estimates are capped at the
/// magnitude white noise of that level would produce.
pub fn spectral_denoise(clip: &AudioClip, noise_floor_db: f64, diag: &mut Diagnostics) -> Result<AudioClip> {
    spectral_denoise_with(clip, noise_floor_db, &DenoiseConfig::default(), diag)
}

pub fn spectral_denoise_with(
    clip: &AudioClip,
    noise_floor_db: f64,
    cfg: &DenoiseConfig,
    diag: &mut Diagnostics,
) -> Result<AudioClip> {
    if clip.channels() > 2 {
        return Err(Error::validation("denoising expects mono or stereo input"));
    }
    if cfg.window < 2 || cfg.hop == 0 || cfg.hop > cfg.window {
        return Err(Error::validation("invalid denoise window/hop"));
    }
    if clip.frames() < cfg.window {
        diag.warn(
            "spectral_denoise",
            format!(
                "clip of {} frames shorter than one {}-sample window; returned unchanged",
                clip.frames(),
                cfg.window
            ),
        );
        return Ok(clip.clone());
    }
    let stft = Stft::new(cfg.window, cfg.hop);
    let window_power: f64 = super::stft::hann(cfg.window).iter().map(|w| w * w).sum();
    let cap = 10f64.powf(noise_floor_db / 20.0) * window_power.sqrt();
    Ok(clip.map_channels(|ch| {
        let mut spec = stft.analyze(&ch);
        let noise = noise_profile(&spec.frames, cfg.noise_percentile);
        for frame in spec.frames.iter_mut() {
            for (bin, noise_mag) in frame.iter_mut().zip(&noise) {
                let mag = bin.norm();
                if mag == 0.0 {
                    continue;
                }
                let reduced = (mag - cfg.over_subtraction * noise_mag.min(cap)).max(cfg.spectral_floor * mag);
                *bin *= reduced / mag;
            }
        }
        stft.synthesize(&spec)
    }))
}

/// Per-bin RMS magnitude over the quietest `percentile` % of frames.
fn noise_profile(frames: &[Vec<Complex64>], percentile: f64) -> Vec<f64> {
    let bins = frames.first().map_or(0, Vec::len);
    let mut order: Vec<(f64, usize)> = frames
        .iter()
        .enumerate()
        .map(|(i, f)| (f.iter().map(|c| c.norm_sqr()).sum::<f64>(), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let count = ((percentile / 100.0 * frames.len() as f64).ceil() as usize).clamp(1, frames.len());
    let mut power = vec![0.0; bins];
    for &(_, i) in &order[..count] {
        for (p, c) in power.iter_mut().zip(&frames[i]) {
            *p += c.norm_sqr();
        }
    }
    power.into_iter().map(|p| (p / count as f64).sqrt()).collect()
}

/// Extends `clip` to `target_s` seconds by repeating it, joining repetitions
/// with 50 ms equal-power crossfades.
pub fn loop_pad(clip: &AudioClip, target_s: f64) -> Result<AudioClip> {
    if clip.is_empty() {
        return Err(Error::validation("cannot loop an empty clip"));
    }
    let sr = clip.sample_rate() as f64;
    let target = (target_s * sr).round();
    let frames = clip.frames();
    if !target.is_finite() || target < frames as f64 {
        return Err(Error::validation(format!(
            "target {target_s} s shorter than clip duration {} s",
            clip.duration_s()
        )));
    }
    let target = target as usize;
    if target == frames {
        return Ok(clip.clone());
    }
    let xf = ((LOOP_CROSSFADE_S * sr).round() as usize).min(frames / 2);
    let fade_in: Vec<f64> = (0..xf)
        .map(|i| ((i as f64 + 0.5) / xf as f64 * FRAC_PI_2).sin())
        .collect();
    Ok(clip.map_channels(|src| {
        let mut out = Vec::with_capacity(target + frames);
        out.extend_from_slice(&src);
        while out.len() < target {
            let base = out.len() - xf;
            for (i, g_in) in fade_in.iter().enumerate() {
                let g_out = (1.0 - g_in * g_in).sqrt();
                out[base + i] = out[base + i] * g_out + src[i] * g_in;
            }
            out.extend_from_slice(&src[xf..]);
        }
        out.truncate(target);
        out
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::rms;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    const FS: u32 = 48_000;

    fn tone(freq: f64, secs: f64, amp: f64) -> Vec<f64> {
        (0..(secs * FS as f64).round() as usize)
            .map(|n| amp * (2.0 * PI * freq * n as f64 / FS as f64).sin())
            .collect()
    }

    fn clip(x: &[f64]) -> AudioClip {
        AudioClip::from_mono(FS, x.iter().map(|&v| v as f32).collect()).unwrap()
    }

    #[test]
    fn gate_on_silence_is_empty() {
        let c = AudioClip::silence(FS, 1, FS as usize).unwrap();
        assert!(gate_silence(&c, -40.0).unwrap().is_empty());
        let empty = AudioClip::silence(FS, 1, 0).unwrap();
        assert!(gate_silence(&empty, -40.0).unwrap().is_empty());
        assert!(gate_silence(&c, 0.0).is_err());
    }

    #[test]
    fn gate_full_scale_sine() {
        let segs = gate_silence(&clip(&tone(440.0, 1.0, 1.0)), -40.0).unwrap();
        assert_eq!(segs.len(), 1);
        assert!(segs[0].0.abs() <= GATE_HOP_S);
        assert!((segs[0].1 - 1.0).abs() <= GATE_HOP_S);
    }

    #[test]
    fn gate_splits_around_silence() {
        let mut x = tone(440.0, 0.5, 0.5);
        x.extend(vec![0.0; FS as usize / 2]);
        x.extend(tone(440.0, 0.5, 0.5));
        let segs = gate_silence(&clip(&x), -40.0).unwrap();
        assert_eq!(segs.len(), 2);
        assert!((segs[0].1 - 0.5).abs() <= GATE_WINDOW_S);
        assert!((segs[1].0 - 1.0).abs() <= GATE_WINDOW_S);
        assert!(segs[0].1 < segs[1].0);
    }

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        dot / (rms(a) * rms(b) * a.len() as f64)
    }

    #[test]
    fn denoise_preserves_clean_tone() {
        let x = tone(440.0, 1.0, 0.5);
        let out = spectral_denoise(&clip(&x), -40.0, &mut Diagnostics::new()).unwrap();
        assert_eq!(out.frames(), x.len());
        assert!(cosine(&x, &out.channel_f64(0)) >= 0.99);
    }

    #[test]
    fn denoise_improves_snr() {
        // -10 dBFS RMS tone gated on and off, -40 dBFS RMS white noise throughout.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let amp = 10f64.powf(-10.0 / 20.0) * 2f64.sqrt();
        let clean: Vec<f64> = tone(440.0, 2.0, amp)
            .into_iter()
            .enumerate()
            .map(|(n, v)| {
                if (n / (FS as usize / 4)).is_multiple_of(2) {
                    v
                } else {
                    0.0
                }
            })
            .collect();
        let sigma = 10f64.powf(-40.0 / 20.0) * 3f64.sqrt();
        let noisy: Vec<f64> = clean.iter().map(|v| v + sigma * rng.random_range(-1.0..1.0)).collect();
        let snr = |y: &[f64]| {
            let err: Vec<f64> = y.iter().zip(&clean).map(|(a, b)| a - b).collect();
            20.0 * (rms(&clean) / rms(&err)).log10()
        };
        let out = spectral_denoise(&clip(&noisy), -40.0, &mut Diagnostics::new()).unwrap();
        let before = snr(&noisy);
        let after = snr(&out.channel_f64(0));
        assert!(after - before >= 6.0, "snr {before:.2} -> {after:.2}");
    }

    #[test]
    fn denoise_zero_and_short_inputs() {
        let zeros = AudioClip::silence(FS, 2, 4096).unwrap();
        let out = spectral_denoise(&zeros, -40.0, &mut Diagnostics::new()).unwrap();
        assert!(out.samples().iter().all(|&s| s == 0.0));

        let short = clip(&tone(440.0, 0.01, 0.5));
        let mut diag = Diagnostics::new();
        assert_eq!(spectral_denoise(&short, -40.0, &mut diag).unwrap(), short);
        assert!(diag.has("spectral_denoise"));
    }

    #[test]
    fn denoise_never_adds_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let x: Vec<f64> = (0..20_000).map(|_| rng.random_range(-0.5..0.5)).collect();
            let out = spectral_denoise(&clip(&x), -20.0, &mut Diagnostics::new()).unwrap();
            let e_in: f64 = x.iter().map(|v| v * v).sum();
            let e_out: f64 = out.channel_f64(0).iter().map(|v| v * v).sum();
            assert!(e_out <= 1.01 * e_in);
        }
    }

    #[test]
    fn loop_pad_lengths() {
        let c = clip(&tone(220.0, 3.0, 0.5));
        let out = loop_pad(&c, 9.0).unwrap();
        assert_eq!(out.frames(), 9 * FS as usize);
        assert_eq!(loop_pad(&c, 3.0).unwrap(), c);
        assert!(loop_pad(&c, 2.0).is_err());
    }

    fn max_jump(x: &[f64]) -> f64 {
        x.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn loop_pad_seams_are_smooth() {
        // 0.3337 s of 200 Hz does not hold a whole number of periods.
        let x = tone(200.0, 0.3337, 0.8);
        let out = loop_pad(&clip(&x), 2.0).unwrap().channel_f64(0);
        assert!(max_jump(&out) <= 1.5 * max_jump(&x));
    }

    #[test]
    fn loop_pad_energy_rate_is_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..FS as usize).map(|_| rng.random_range(-0.5..0.5)).collect();
        let out = loop_pad(&clip(&x), 8.5).unwrap().channel_f64(0);
        let per_sec = |v: &[f64]| v.iter().map(|s| s * s).sum::<f64>() / (v.len() as f64 / FS as f64);
        let ratio_db = 10.0 * (per_sec(&out) / per_sec(&x)).log10();
        assert!(ratio_db.abs() <= 3.0);
    }
}
