use serde::{Deserialize, Serialize};

use crate::audio::{AudioClip, BiquadCascade, BiquadSpec};
use crate::error::{Error, Result};
use crate::spatial::{schroeder_reverb, RoomSpec};

pub const EQ_LIMIT_DB: f64 = 12.0;
pub const EQ_LOW_SHELF_HZ: f64 = 250.0;
pub const EQ_PEAK_HZ: f64 = 1000.0;
pub const EQ_PEAK_Q: f64 = 0.7;
pub const EQ_HIGH_SHELF_HZ: f64 = 4000.0;
pub const MIX_CEILING_DBFS: f64 = -0.5;
pub const LIMITER_KNEE_DB: f64 = 3.0;
pub const LFE_CUTOFF_HZ: f64 = 120.0;
pub const LFE_ORDER: usize = 4;
/// Centre feed, applied to L + R.
pub const CENTER_GAIN: f64 = 0.353_553_390_593_273_8;
pub const SURROUND_GAIN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReverbParams {
    pub rt60_s: f64,
    pub wet_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EqParams {
    pub low_db: f64,
    pub mid_db: f64,
    pub high_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynParams {
    pub gain_db: f64,
    pub limiter_ceiling_dbfs: f64,
}

pub fn apply_reverb_spec(clip: &AudioClip, theta: &ReverbParams) -> Result<AudioClip> {
    let room = RoomSpec::custom(theta.rt60_s, theta.wet_ratio);
    room.validate()?;
    Ok(schroeder_reverb(clip, &room))
}

/// Low shelf at 250 Hz, peaking band at 1 kHz (Q 0.7) and high shelf at
/// 4 kHz. Bands with zero gain are skipped.
pub fn apply_eq_spec(clip: &AudioClip, theta: &EqParams) -> Result<AudioClip> {
    let bands = [
        (theta.low_db, BiquadSpec::low_shelf(EQ_LOW_SHELF_HZ, theta.low_db)),
        (theta.mid_db, BiquadSpec::peaking(EQ_PEAK_HZ, EQ_PEAK_Q, theta.mid_db)),
        (theta.high_db, BiquadSpec::high_shelf(EQ_HIGH_SHELF_HZ, theta.high_db)),
    ];
    let mut cascades = Vec::new();
    for (gain, spec) in bands {
        if !(gain.abs() <= EQ_LIMIT_DB) {
            return Err(Error::validation(format!(
                "eq gain {gain} dB outside +/-{EQ_LIMIT_DB} dB"
            )));
        }
        if gain != 0.0 {
            cascades.push(BiquadCascade::design(&spec, clip.sample_rate())?);
        }
    }
    if cascades.is_empty() {
        return Ok(clip.clone());
    }
    Ok(clip.map_channels(|mut ch| {
        for c in &cascades {
            c.process(&mut ch);
        }
        ch
    }))
}

/// Tanh soft clipper: transparent up to 3 dB below `ceiling` (linear),
/// then bends smoothly towards the ceiling without reaching it.
pub(crate) fn soft_limit(x: f64, ceiling: f64) -> f64 {
    let knee = ceiling * 10f64.powf(-LIMITER_KNEE_DB / 20.0);
    let a = x.abs();
    if a <= knee {
        x
    } else {
        let room = ceiling - knee;
        x.signum() * (knee + room * ((a - knee) / room).tanh())
    }
}

pub fn apply_dyn_spec(clip: &AudioClip, theta: &DynParams) -> Result<AudioClip> {
    if !(theta.limiter_ceiling_dbfs <= 0.0) {
        return Err(Error::validation("limiter ceiling must not exceed 0 dBFS"));
    }
    if !theta.gain_db.is_finite() {
        return Err(Error::validation("dynamics gain must be finite"));
    }
    let gain = 10f64.powf(theta.gain_db / 20.0);
    let ceiling = 10f64.powf(theta.limiter_ceiling_dbfs / 20.0);
    Ok(clip.map_channels(|ch| ch.into_iter().map(|v| soft_limit(v * gain, ceiling)).collect()))
}

/// Sums stereo tracks at sample-accurate offsets and soft-limits the sum
/// at -0.5 dBFS.
pub fn mix_tracks(tracks: &[AudioClip], offsets_s: &[f64]) -> Result<AudioClip> {
    if tracks.len() != offsets_s.len() {
        return Err(Error::validation("one offset is needed per track"));
    }
    let Some(first) = tracks.first() else {
        return Err(Error::validation("nothing to mix"));
    };
    let fs = first.sample_rate();
    let mut starts = Vec::with_capacity(tracks.len());
    for (t, &off) in tracks.iter().zip(offsets_s) {
        if t.sample_rate() != fs {
            return Err(Error::validation(format!(
                "sample rate mismatch: {} Hz vs {fs} Hz",
                t.sample_rate()
            )));
        }
        if t.channels() != 2 {
            return Err(Error::validation("mix_tracks expects stereo tracks"));
        }
        if !(off >= 0.0 && off.is_finite()) {
            return Err(Error::validation("offsets must be non-negative"));
        }
        starts.push((off * fs as f64).round() as usize);
    }
    let len = tracks
        .iter()
        .zip(&starts)
        .map(|(t, s)| s + t.frames())
        .max()
        .unwrap_or(0);
    let mut sum = vec![0.0f64; len * 2];
    for (t, &s) in tracks.iter().zip(&starts) {
        for (acc, &v) in sum[s * 2..].iter_mut().zip(t.samples()) {
            *acc += v as f64;
        }
    }
    let ceiling = 10f64.powf(MIX_CEILING_DBFS / 20.0);
    let out = sum.into_iter().map(|v| soft_limit(v, ceiling) as f32).collect();
    Ok(AudioClip::from_parts(fs, 2, out))
}

fn require_stereo(clip: &AudioClip, op: &str) -> Result<()> {
    if clip.channels() == 2 {
        Ok(())
    } else {
        Err(Error::validation(format!(
            "{op} expects stereo input, got {} channels",
            clip.channels()
        )))
    }
}

/// Low-passed L + R through a 4th-order Butterworth at 120 Hz.
pub fn lfe_channel(stereo: &AudioClip) -> Result<AudioClip> {
    require_stereo(stereo, "lfe_channel")?;
    let (l, r) = (stereo.channel_f64(0), stereo.channel_f64(1));
    let mut s: Vec<f64> = l.iter().zip(&r).map(|(a, b)| a + b).collect();
    BiquadCascade::design(
        &BiquadSpec::butterworth_lowpass(LFE_CUTOFF_HZ, LFE_ORDER),
        stereo.sample_rate(),
    )?
    .process(&mut s);
    Ok(AudioClip::from_channels_f64(stereo.sample_rate(), &[s]))
}

/// Stereo to 5.1 in FL, FR, C, LFE, SL, SR order. Front channels are
/// copied bit-exactly.
pub fn upmix_51(stereo: &AudioClip) -> Result<AudioClip> {
    require_stereo(stereo, "upmix_51")?;
    let lfe = lfe_channel(stereo)?;
    let lfe = lfe.samples();
    let mut out = Vec::with_capacity(stereo.frames() * 6);
    for (frame, &sub) in stereo.samples().chunks_exact(2).zip(lfe) {
        let (l, r) = (frame[0], frame[1]);
        let c = CENTER_GAIN * (l as f64 + r as f64);
        out.extend_from_slice(&[
            l,
            r,
            c as f32,
            sub,
            (SURROUND_GAIN * l as f64) as f32,
            (SURROUND_GAIN * r as f64) as f32,
        ]);
    }
    Ok(AudioClip::from_parts(stereo.sample_rate(), 6, out))
}
