//! Audio containers, WAV I/O, IIR filtering and corpus preparation.

pub(crate) mod biquad;
pub(crate) mod prep;
pub(crate) mod stft;
mod wav;

pub use biquad::{biquad_apply, BiquadCascade, BiquadSpec, FilterKind};
pub use prep::{
    gate_silence, loop_pad, spectral_denoise, spectral_denoise_with, DenoiseConfig, GATE_HOP_S, GATE_WINDOW_S,
};
pub use wav::{load_wav, save_wav, WavEncoding};

use crate::error::{Error, Result};

/// Channel counts a clip may carry: mono, stereo or 5.1.
pub const SUPPORTED_CHANNELS: [usize; 3] = [1, 2, 6];

/// Interleaved (frame-major) floating point audio.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    sample_rate: u32,
    channels: usize,
    samples: Vec<f32>,
}

impl AudioClip {
    /// Builds a clip after checking the rate, channel count, length and
    /// finiteness of every sample.
    pub fn new(sample_rate: u32, channels: usize, samples: Vec<f32>) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::validation("sample rate must be positive"));
        }
        if !SUPPORTED_CHANNELS.contains(&channels) {
            return Err(Error::validation(format!(
                "channel count {channels} not in {{1, 2, 6}}"
            )));
        }
        if !samples.len().is_multiple_of(channels) {
            return Err(Error::validation(format!(
                "{} samples is not a multiple of {channels} channels",
                samples.len()
            )));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::validation("non-finite sample"));
        }
        Ok(Self {
            sample_rate,
            channels,
            samples,
        })
    }

    /// Internal constructor for outputs of operations that preserve the
    /// invariants by construction. Non-finite values are flushed to zero.
    pub(crate) fn from_parts(sample_rate: u32, channels: usize, mut samples: Vec<f32>) -> Self {
        debug_assert!(sample_rate > 0);
        debug_assert!(SUPPORTED_CHANNELS.contains(&channels));
        debug_assert_eq!(samples.len() % channels, 0);
        for s in samples.iter_mut() {
            if !s.is_finite() {
                *s = 0.0;
            }
        }
        Self {
            sample_rate,
            channels,
            samples,
        }
    }

    pub fn silence(sample_rate: u32, channels: usize, frames: usize) -> Result<Self> {
        Self::new(sample_rate, channels, vec![0.0; frames * channels])
    }

    pub fn from_mono(sample_rate: u32, samples: Vec<f32>) -> Result<Self> {
        Self::new(sample_rate, 1, samples)
    }

    /// Interleaves equally long per-channel buffers.
    pub fn from_channels(sample_rate: u32, channels: &[Vec<f32>]) -> Result<Self> {
        let n = channels.len();
        let frames = channels.first().map_or(0, Vec::len);
        if channels.iter().any(|c| c.len() != frames) {
            return Err(Error::validation("channel buffers differ in length"));
        }
        let mut samples = Vec::with_capacity(frames * n);
        for i in 0..frames {
            for ch in channels {
                samples.push(ch[i]);
            }
        }
        Self::new(sample_rate, n, samples)
    }

    pub(crate) fn from_channels_f64(sample_rate: u32, channels: &[Vec<f64>]) -> Self {
        let n = channels.len();
        let frames = channels.first().map_or(0, Vec::len);
        let mut samples = Vec::with_capacity(frames * n);
        for i in 0..frames {
            for ch in channels {
                samples.push(ch[i] as f32);
            }
        }
        Self::from_parts(sample_rate, n, samples)
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn frames(&self) -> usize {
        self.samples.len() / self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.frames() as f64 / self.sample_rate as f64
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    /// Copy of one channel.
    pub fn channel(&self, index: usize) -> Vec<f32> {
        assert!(index < self.channels, "channel {index} out of range");
        self.samples
            .iter()
            .skip(index)
            .step_by(self.channels)
            .copied()
            .collect()
    }

    pub(crate) fn channel_f64(&self, index: usize) -> Vec<f64> {
        self.samples
            .iter()
            .skip(index)
            .step_by(self.channels)
            .map(|&s| s as f64)
            .collect()
    }

    pub(crate) fn channels_f64(&self) -> Vec<Vec<f64>> {
        (0..self.channels).map(|c| self.channel_f64(c)).collect()
    }

    /// Mean over channels, one value per frame.
    pub fn mono_mix(&self) -> Vec<f64> {
        self.samples
            .chunks_exact(self.channels)
            .map(|f| f.iter().map(|&s| s as f64).sum::<f64>() / self.channels as f64)
            .collect()
    }

    pub fn to_mono(&self) -> AudioClip {
        let mono = self.mono_mix().into_iter().map(|s| s as f32).collect();
        Self::from_parts(self.sample_rate, 1, mono)
    }

    /// Duplicates a mono clip into both stereo channels; stereo passes through.
    pub fn to_stereo(&self) -> Result<AudioClip> {
        match self.channels {
            2 => Ok(self.clone()),
            1 => {
                let mut out = Vec::with_capacity(self.samples.len() * 2);
                for &s in &self.samples {
                    out.push(s);
                    out.push(s);
                }
                Ok(Self::from_parts(self.sample_rate, 2, out))
            }
            n => Err(Error::validation(format!("cannot fold {n} channels to stereo"))),
        }
    }

    /// Sub-range of frames, clamped to the clip.
    pub fn slice_frames(&self, start: usize, end: usize) -> AudioClip {
        let end = end.min(self.frames());
        let start = start.min(end);
        Self::from_parts(
            self.sample_rate,
            self.channels,
            self.samples[start * self.channels..end * self.channels].to_vec(),
        )
    }

    pub fn peak(&self) -> f32 {
        self.samples.iter().fold(0.0f32, |m, s| m.max(s.abs()))
    }

    /// Applies `f` to each de-interleaved channel and re-interleaves. All
    /// outputs must share one length.
    pub(crate) fn map_channels<F>(&self, mut f: F) -> AudioClip
    where
        F: FnMut(Vec<f64>) -> Vec<f64>,
    {
        let outs: Vec<Vec<f64>> = self.channels_f64().into_iter().map(&mut f).collect();
        Self::from_channels_f64(self.sample_rate, &outs)
    }
}

#[cfg(test)]
pub(crate) fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_channel_counts() {
        assert!(AudioClip::new(48_000, 3, vec![0.0; 6]).is_err());
        assert!(AudioClip::new(48_000, 2, vec![0.0; 5]).is_err());
        assert!(AudioClip::new(0, 1, vec![]).is_err());
        assert!(AudioClip::new(48_000, 1, vec![f32::NAN]).is_err());
    }

    #[test]
    fn interleaving_round_trip() {
        let l = vec![1.0, 2.0, 3.0];
        let r = vec![-1.0, -2.0, -3.0];
        let clip = AudioClip::from_channels(8000, &[l.clone(), r.clone()]).unwrap();
        assert_eq!(clip.samples(), &[1.0, -1.0, 2.0, -2.0, 3.0, -3.0]);
        assert_eq!(clip.channel(0), l);
        assert_eq!(clip.channel(1), r);
        assert_eq!(clip.mono_mix(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn from_parts_flushes_non_finite() {
        let clip = AudioClip::from_parts(8000, 1, vec![f32::INFINITY, 0.5]);
        assert_eq!(clip.samples(), &[0.0, 0.5]);
    }
}
