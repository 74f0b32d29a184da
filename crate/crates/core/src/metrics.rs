//! Objective evaluation: GCC-PHAT azimuth, temporal IoU, loudness error,
//! log-spectral distance and RT60 error, plus a port for learned
//! embedding metrics.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::annotate::EventSpan;
use crate::audio::stft::Stft;
use crate::audio::AudioClip;
use crate::diag::Diagnostics;
use crate::error::{Error, Result};
use crate::mix::{integrated_loudness, schroeder_rt60};
use crate::spatial::{azimuth_from_itd, SPEED_OF_SOUND_M_S};

pub const LSD_WINDOW: usize = 1024;
pub const LSD_HOP: usize = 256;
pub const LSD_EPSILON: f64 = 1e-10;
/// Cross-spectrum bins below this fraction of the strongest bin are left
/// out of the PHAT sum.
pub const PHAT_FLOOR: f64 = 1e-3;

/// Azimuth from the inter-channel delay found by PHAT-weighted
/// cross-correlation, with parabolic sub-sample refinement of the peak.
pub fn gcc_phat_azimuth(stereo: &AudioClip, interaural_m: f64) -> Result<f64> {
    if stereo.channels() != 2 {
        return Err(Error::validation("gcc_phat_azimuth expects stereo input"));
    }
    if !(interaural_m > 0.0) {
        return Err(Error::validation("interaural distance must be positive"));
    }
    let (l, r) = (stereo.channel_f64(0), stereo.channel_f64(1));
    if l.iter().all(|&v| v == 0.0) || r.iter().all(|&v| v == 0.0) {
        return Err(Error::Estimation("a channel is silent; delay is undefined".into()));
    }
    let n = (2 * stereo.frames()).next_power_of_two();
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    let spectrum = |x: &[f64]| {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        buf.resize(n, Complex64::new(0.0, 0.0));
        forward.process(&mut buf);
        buf
    };
    let (sl, sr) = (spectrum(&l), spectrum(&r));
    let mut cross: Vec<Complex64> = sl.iter().zip(&sr).map(|(a, b)| a * b.conj()).collect();
    let peak_mag = cross.iter().map(|c| c.norm()).fold(0.0, f64::max);
    for c in cross.iter_mut() {
        let m = c.norm();
        *c = if m > peak_mag * PHAT_FLOOR {
            *c / m
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    planner.plan_fft_inverse(n).process(&mut cross);
    let corr = |lag: isize| cross[lag.rem_euclid(n as isize) as usize].re;

    let fs = stereo.sample_rate() as f64;
    let max_lag = (interaural_m / SPEED_OF_SOUND_M_S * fs).ceil() as isize + 1;
    let best = (-max_lag..=max_lag)
        .max_by(|&a, &b| corr(a).total_cmp(&corr(b)).then(b.abs().cmp(&a.abs())))
        .expect("non-empty lag range");
    let (ym, y0, yp) = (corr(best - 1), corr(best), corr(best + 1));
    let denom = ym - 2.0 * y0 + yp;
    let offset = if denom < 0.0 {
        (0.5 * (ym - yp) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let itd = (best as f64 + offset) / fs;
    Ok(azimuth_from_itd(itd, interaural_m).clamp(0.0, 180.0))
}

pub fn azimuth_mae(estimates: &[f64], truths: &[f64]) -> Result<f64> {
    if estimates.len() != truths.len() {
        return Err(Error::validation("estimate and truth lists differ in length"));
    }
    if estimates.is_empty() {
        return Err(Error::validation("no azimuths to compare"));
    }
    Ok(estimates.iter().zip(truths).map(|(e, t)| (e - t).abs()).sum::<f64>() / estimates.len() as f64)
}

/// Sorted, merged copy of a span list as plain intervals.
fn normalize(spans: &[EventSpan]) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = spans
        .iter()
        .filter(|s| s.end_s > s.start_s)
        .map(|s| (s.start_s, s.end_s))
        .collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (s, e) in v {
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

fn measure(iv: &[(f64, f64)]) -> f64 {
    iv.iter().map(|(s, e)| e - s).sum()
}

fn intersection(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let (mut i, mut j, mut total) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if hi > lo {
            total += hi - lo;
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    total
}

/// Length of the overlap over length of the union of two span sets.
/// Two empty sets agree perfectly and score 1.
pub fn temporal_iou(pred: &[EventSpan], truth: &[EventSpan]) -> f64 {
    let (p, t) = (normalize(pred), normalize(truth));
    let inter = intersection(&p, &t);
    let union = measure(&p) + measure(&t) - inter;
    if union <= 0.0 {
        1.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

pub fn loudness_error(a: &AudioClip, b: &AudioClip) -> Result<f64> {
    let mut diag = Diagnostics::new();
    let la = integrated_loudness(a, &mut diag)?;
    let lb = integrated_loudness(b, &mut diag)?;
    if !(la.is_finite() && lb.is_finite()) {
        return Err(Error::Estimation("loudness of silence is undefined".into()));
    }
    Ok((la - lb).abs())
}

/// Mean over STFT frames of the RMS difference of log power spectra.
/// The shorter clip is zero-padded; mismatched channel layouts are
/// compared on their mono mixes.
pub fn log_spectral_distance(a: &AudioClip, b: &AudioClip, diag: &mut Diagnostics) -> Result<f64> {
    if a.sample_rate() != b.sample_rate() {
        return Err(Error::validation("sample rates differ"));
    }
    if a.frames() != b.frames() {
        diag.warn(
            "log_spectral_distance",
            format!("lengths differ ({} vs {} frames); zero-padding", a.frames(), b.frames()),
        );
    }
    let (xa, xb) = if a.channels() == b.channels() {
        (a.channels_f64(), b.channels_f64())
    } else {
        (vec![a.mono_mix()], vec![b.mono_mix()])
    };
    let len = a.frames().max(b.frames());
    let stft = Stft::new(LSD_WINDOW, LSD_HOP);
    let log_power = |c: &Complex64| 10.0 * (c.norm_sqr() + LSD_EPSILON).log10();
    let count = xa.len();
    let mut total = 0.0;
    for (mut ca, mut cb) in xa.into_iter().zip(xb) {
        ca.resize(len, 0.0);
        cb.resize(len, 0.0);
        let (sa, sb) = (stft.analyze(&ca), stft.analyze(&cb));
        let per_frame: f64 = sa
            .frames
            .iter()
            .zip(&sb.frames)
            .map(|(fa, fb)| {
                let ms = fa
                    .iter()
                    .zip(fb)
                    .map(|(x, y)| (log_power(x) - log_power(y)).powi(2))
                    .sum::<f64>()
                    / fa.len() as f64;
                ms.sqrt()
            })
            .sum();
        total += per_frame / sa.frames.len().max(1) as f64;
    }
    Ok(total / count as f64)
}

pub fn rt60_error(clip: &AudioClip, target_s: f64) -> Result<f64> {
    Ok((schroeder_rt60(clip)? - target_s).abs())
}

/// Metrics of one evaluated item; absent fields were not computable.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ItemMetrics {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub azimuth_est_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub azimuth_true_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iou: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loudness_error_lu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lsd_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rt60_error_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(default = "crate::schema_version")]
    pub schema_version: u32,
    pub gcc_mae_deg: Option<f64>,
    pub iou: Option<f64>,
    pub loudness_error_lu: Option<f64>,
    pub lsd_db: Option<f64>,
    pub rt60_error_s: Option<f64>,
    pub items: Vec<ItemMetrics>,
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl MetricReport {
    pub fn from_items(items: Vec<ItemMetrics>) -> Self {
        let gcc = mean_of(
            items
                .iter()
                .filter_map(|i| Some((i.azimuth_est_deg? - i.azimuth_true_deg?).abs())),
        );
        Self {
            schema_version: crate::SCHEMA_VERSION,
            gcc_mae_deg: gcc,
            iou: mean_of(items.iter().filter_map(|i| i.iou)),
            loudness_error_lu: mean_of(items.iter().filter_map(|i| i.loudness_error_lu)),
            lsd_db: mean_of(items.iter().filter_map(|i| i.lsd_db)),
            rt60_error_s: mean_of(items.iter().filter_map(|i| i.rt60_error_s)),
            items,
        }
    }
}

/// Maps a clip to a fixed-length embedding, e.g. a learned audio encoder.
pub trait EmbeddingPort: Send + Sync {
    fn embed(&self, clip: &AudioClip) -> Result<Vec<f64>>;
}

/// Fréchet distance between two embedding sets under a diagonal Gaussian
/// fit.
pub fn frechet_distance_diag(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    let dim = a.first().or(b.first()).map(Vec::len).unwrap_or(0);
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::validation("each set needs at least two embeddings"));
    }
    if a.iter().chain(b).any(|v| v.len() != dim) {
        return Err(Error::validation("embedding dimensions differ"));
    }
    let stats = |set: &[Vec<f64>]| {
        let n = set.len() as f64;
        let mean: Vec<f64> = (0..dim).map(|d| set.iter().map(|v| v[d]).sum::<f64>() / n).collect();
        let var: Vec<f64> = (0..dim)
            .map(|d| set.iter().map(|v| (v[d] - mean[d]).powi(2)).sum::<f64>() / (n - 1.0))
            .collect();
        (mean, var)
    };
    let ((ma, va), (mb, vb)) = (stats(a), stats(b));
    Ok((0..dim)
        .map(|d| (ma[d] - mb[d]).powi(2) + va[d] + vb[d] - 2.0 * (va[d] * vb[d]).sqrt())
        .sum())
}

pub fn embedding_frechet(port: &dyn EmbeddingPort, a: &[AudioClip], b: &[AudioClip]) -> Result<f64> {
    let ea = a.iter().map(|c| port.embed(c)).collect::<Result<Vec<_>>>()?;
    let eb = b.iter().map(|c| port.embed(c)).collect::<Result<Vec<_>>>()?;
    frechet_distance_diag(&ea, &eb)
}
