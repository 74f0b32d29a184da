use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use serde::{Deserialize, Serialize};

use super::{AudioClip, SUPPORTED_CHANNELS};
use crate::diag::Diagnostics;
use crate::error::{Error, Result};

/// Sample encodings `save_wav` can write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WavEncoding {
    Pcm16,
    #[default]
    Float32,
}

/// Reads a RIFF/WAVE file holding PCM16, PCM24 or IEEE float32 samples.
///
/// Integer samples are scaled by `1 / 2^(bits - 1)`. Multichannel files are
/// returned in file order, which for six channels is FL, FR, C, LFE, SL, SR.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{} not found", path.display()),
        )));
    }
    let mut reader = WavReader::open(path)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    let samples: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f32 / 32_768.0))
            .collect::<std::result::Result<_, _>>()?,
        (SampleFormat::Int, 24) => reader
            .samples::<i32>()
            .map(|s| s.map(|v| v as f32 / 8_388_608.0))
            .collect::<std::result::Result<_, _>>()?,
        (SampleFormat::Float, 32) => reader.samples::<f32>().collect::<std::result::Result<_, _>>()?,
        (format, bits) => {
            return Err(Error::Unsupported(format!("{format:?} with {bits} bits")));
        }
    };
    if !SUPPORTED_CHANNELS.contains(&channels) {
        return Err(Error::validation(format!(
            "{}: channel count {channels} not in {{1, 2, 6}}",
            path.display()
        )));
    }
    AudioClip::new(spec.sample_rate, channels, samples)
}

/// Writes `clip` to `path`.
///
/// PCM16 output saturates amplitudes outside [-1, 1]; the number of clipped
/// samples is reported through `diag`. Float32 output is lossless.
pub fn save_wav(clip: &AudioClip, path: impl AsRef<Path>, encoding: WavEncoding, diag: &mut Diagnostics) -> Result<()> {
    let (bits, format) = match encoding {
        WavEncoding::Pcm16 => (16, SampleFormat::Int),
        WavEncoding::Float32 => (32, SampleFormat::Float),
    };
    let spec = WavSpec {
        channels: clip.channels() as u16,
        sample_rate: clip.sample_rate(),
        bits_per_sample: bits,
        sample_format: format,
    };
    let mut writer = WavWriter::create(path.as_ref(), spec)?;
    match encoding {
        WavEncoding::Float32 => {
            for &s in clip.samples() {
                writer.write_sample(s)?;
            }
        }
        WavEncoding::Pcm16 => {
            let mut clipped = 0usize;
            for &s in clip.samples() {
                if s.abs() > 1.0 {
                    clipped += 1;
                }
                let v = (s as f64 * 32_768.0).round().clamp(-32_768.0, 32_767.0) as i16;
                writer.write_sample(v)?;
            }
            if clipped > 0 {
                diag.warn("save_wav", format!("{clipped} samples clipped to full scale"));
            }
        }
    }
    writer.finalize()?;
    Ok(())
}
