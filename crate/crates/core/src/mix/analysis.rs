use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::audio::biquad::{BiquadCascade, Section};
use crate::audio::AudioClip;
use crate::diag::Diagnostics;
use crate::error::{Error, Result};

pub const BLOCK_S: f64 = 0.4;
pub const BLOCK_STEP_S: f64 = 0.1;
pub const ABSOLUTE_GATE_LUFS: f64 = -70.0;
pub const RELATIVE_GATE_LU: f64 = -10.0;
const LOUDNESS_OFFSET: f64 = -0.691;

/// Floor reported for bands without energy.
pub const BAND_FLOOR_DB: f64 = -120.0;
pub const LOW_MID_SPLIT_HZ: f64 = 250.0;
pub const MID_HIGH_SPLIT_HZ: f64 = 4000.0;

/// Two-stage loudness pre-filter: a +4 dB high shelf near 1.68 kHz
/// followed by a 38 Hz high-pass, designed by bilinear transform for `fs`.
pub(crate) fn k_weighting(fs: f64) -> BiquadCascade {
    let shelf = {
        let gain_db = 3.999_843_853_97;
        let q = 0.707_175_236_955_419_3;
        let k = (PI * 1_681.974_450_955_532 / fs).tan();
        let vh = 10f64.powf(gain_db / 20.0);
        let vb = vh.powf(0.499_666_774_155);
        Section::normalized(
            vh + vb * k / q + k * k,
            2.0 * (k * k - vh),
            vh - vb * k / q + k * k,
            1.0 + k / q + k * k,
            2.0 * (k * k - 1.0),
            1.0 - k / q + k * k,
        )
    };
    let highpass = {
        let q = 0.500_327_037_325_395_3;
        let k = (PI * 38.135_470_876_139_82 / fs).tan();
        let a0 = 1.0 + k / q + k * k;
        Section {
            b0: 1.0,
            b1: -2.0,
            b2: 1.0,
            a1: 2.0 * (k * k - 1.0) / a0,
            a2: (1.0 - k / q + k * k) / a0,
        }
    };
    BiquadCascade::from_sections(vec![shelf, highpass])
}

/// Per-channel weights: surrounds count 1.41, the LFE is excluded.
fn channel_weights(channels: usize) -> Vec<f64> {
    match channels {
        6 => vec![1.0, 1.0, 1.0, 0.0, 1.41, 1.41],
        n => vec![1.0; n],
    }
}

fn to_lufs(power: f64) -> f64 {
    if power > 0.0 {
        LOUDNESS_OFFSET + 10.0 * power.log10()
    } else {
        f64::NEG_INFINITY
    }
}

/// Gated integrated loudness in LUFS. Silence reads `-inf`. Clips shorter
/// than one 400 ms block are measured ungated over their full length.
pub fn integrated_loudness(clip: &AudioClip, diag: &mut Diagnostics) -> Result<f64> {
    if clip.is_empty() {
        return Err(Error::validation("cannot measure loudness of an empty clip"));
    }
    let fs = clip.sample_rate() as f64;
    let filter = k_weighting(fs);
    let weighted: Vec<(f64, Vec<f64>)> = clip
        .channels_f64()
        .into_iter()
        .zip(channel_weights(clip.channels()))
        .filter(|(_, w)| *w > 0.0)
        .map(|(mut ch, w)| {
            filter.process(&mut ch);
            (w, ch)
        })
        .collect();
    let block = (BLOCK_S * fs).round() as usize;
    let step = (BLOCK_STEP_S * fs).round() as usize;
    let frames = clip.frames();
    let power = |a: usize, b: usize| -> f64 {
        weighted
            .iter()
            .map(|(w, ch)| w * ch[a..b].iter().map(|v| v * v).sum::<f64>() / (b - a) as f64)
            .sum()
    };
    if frames < block {
        diag.warn(
            "integrated_loudness",
            format!(
                "clip of {:.3} s is shorter than one block; measured ungated",
                clip.duration_s()
            ),
        );
        return Ok(to_lufs(power(0, frames)));
    }
    let blocks: Vec<f64> = (0..=(frames - block) / step)
        .map(|j| power(j * step, j * step + block))
        .filter(|&p| to_lufs(p) > ABSOLUTE_GATE_LUFS)
        .collect();
    if blocks.is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let relative = to_lufs(mean(&blocks)) + RELATIVE_GATE_LU;
    let gated: Vec<f64> = blocks.into_iter().filter(|&p| to_lufs(p) > relative).collect();
    Ok(if gated.is_empty() {
        f64::NEG_INFINITY
    } else {
        to_lufs(mean(&gated))
    })
}

/// Reverberation time from Schroeder backward integration of the energy
/// summed over channels. A line is fitted to the -5..-35 dB part of the
/// decay curve and extrapolated to -60 dB.
pub fn schroeder_rt60(clip: &AudioClip) -> Result<f64> {
    let fs = clip.sample_rate() as f64;
    let mut energy = vec![0.0; clip.frames()];
    for ch in clip.channels_f64() {
        for (e, v) in energy.iter_mut().zip(ch) {
            *e += v * v;
        }
    }
    let mut edc = energy;
    for n in (0..edc.len().saturating_sub(1)).rev() {
        edc[n] += edc[n + 1];
    }
    let total = edc.first().copied().unwrap_or(0.0);
    if !(total > 0.0) {
        return Err(Error::Estimation("no energy to integrate".into()));
    }
    let db: Vec<f64> = edc.iter().map(|e| 10.0 * (e / total).log10()).collect();
    let start = db.iter().position(|&d| d <= -5.0);
    let end = db.iter().position(|&d| d <= -35.0);
    let (start, end) = match (start, end) {
        (Some(s), Some(e)) => (s, e),
        _ => return Err(Error::Estimation("decay never reaches -35 dB".into())),
    };
    if end - start < 2 {
        return Ok(2.0 * (end - start) as f64 / fs);
    }
    let n = (end - start) as f64;
    let (mut st, mut sd, mut stt, mut std_) = (0.0, 0.0, 0.0, 0.0);
    for (i, &d) in db[start..end].iter().enumerate() {
        let t = (start + i) as f64 / fs;
        st += t;
        sd += d;
        stt += t * t;
        std_ += t * d;
    }
    let slope = (n * std_ - st * sd) / (n * stt - st * st);
    if !(slope < 0.0) {
        return Err(Error::Estimation("decay curve is not decreasing".into()));
    }
    Ok(-60.0 / slope)
}

/// Mean-square level of the low (<250 Hz), mid (250-4000 Hz) and high
/// (>4000 Hz) bands in dB relative to full scale, averaged over channels.
pub fn band_energies(clip: &AudioClip) -> [f64; 3] {
    let frames = clip.frames();
    if frames == 0 {
        return [BAND_FLOOR_DB; 3];
    }
    let n = frames.next_power_of_two();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let fs = clip.sample_rate() as f64;
    let mut bands = [0.0; 3];
    for ch in clip.channels_f64() {
        let mut buf: Vec<Complex<f64>> = ch.into_iter().map(|v| Complex::new(v, 0.0)).collect();
        buf.resize(n, Complex::new(0.0, 0.0));
        fft.process(&mut buf);
        for (k, c) in buf.iter().enumerate() {
            let f = k.min(n - k) as f64 * fs / n as f64;
            let band = if f < LOW_MID_SPLIT_HZ {
                0
            } else if f <= MID_HIGH_SPLIT_HZ {
                1
            } else {
                2
            };
            bands[band] += c.norm_sqr();
        }
    }
    // Parseval: sum |X|^2 / n is the time-domain energy.
    let scale = (n as f64 * frames as f64 * clip.channels() as f64).recip();
    bands.map(|e| {
        let ms = e * scale;
        if ms > 0.0 {
            (10.0 * ms.log10()).max(BAND_FLOOR_DB)
        } else {
            BAND_FLOOR_DB
        }
    })
}

/// Acoustic features of one track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackAnalysis {
    pub track_id: u32,
    pub rt60_s: f64,
    /// `None` in JSON stands for silence (`-inf`).
    #[serde(with = "lufs_serde")]
    pub lufs: f64,
    pub band_energies: [f64; 3],
    pub semantic_tag: String,
}

pub(crate) mod lufs_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

pub fn analyze_track(clip: &AudioClip, track_id: u32, tag: &str, diag: &mut Diagnostics) -> Result<TrackAnalysis> {
    if clip.is_empty() {
        return Err(Error::validation("cannot analyze an empty track"));
    }
    let lufs = integrated_loudness(clip, diag)?;
    let rt60_s = match schroeder_rt60(clip) {
        Ok(rt) => rt,
        Err(e) => {
            if clip.peak() > 0.0 {
                diag.warn(
                    "analyze_track",
                    format!("track {track_id}: rt60 unavailable ({e}); using 0"),
                );
            }
            0.0
        }
    };
    Ok(TrackAnalysis {
        track_id,
        rt60_s,
        lufs,
        band_energies: band_energies(clip),
        semantic_tag: tag.to_string(),
    })
}
