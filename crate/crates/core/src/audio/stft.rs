//! Short-time Fourier transform with weighted overlap-add resynthesis.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Periodic Hann window.
pub(crate) fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

pub(crate) struct Stft {
    window: Vec<f64>,
    hop: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Frames of a signal. The signal is padded with `window - hop` zeros in
/// front so every original sample is covered by the same number of frames.
pub(crate) struct Spectrogram {
    pub frames: Vec<Vec<Complex64>>,
    pad: usize,
    len: usize,
}

impl Stft {
    pub fn new(window_len: usize, hop: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            window: hann(window_len),
            hop,
            forward: planner.plan_fft_forward(window_len),
            inverse: planner.plan_fft_inverse(window_len),
        }
    }

    pub fn bins(&self) -> usize {
        self.window.len() / 2 + 1
    }

    pub fn analyze(&self, x: &[f64]) -> Spectrogram {
        let n = self.window.len();
        let pad = n - self.hop;
        let count = (x.len() + pad).div_ceil(self.hop);
        let mut frames = Vec::with_capacity(count);
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for f in 0..count {
            let start = (f * self.hop) as isize - pad as isize;
            for (i, slot) in buf.iter_mut().enumerate() {
                let idx = start + i as isize;
                let v = if idx >= 0 && (idx as usize) < x.len() {
                    x[idx as usize]
                } else {
                    0.0
                };
                *slot = Complex64::new(v * self.window[i], 0.0);
            }
            self.forward.process(&mut buf);
            frames.push(buf[..self.bins()].to_vec());
        }
        Spectrogram {
            frames,
            pad,
            len: x.len(),
        }
    }

    /// Least-squares inverse: windowed overlap-add divided by the summed
    /// squared window.
    pub fn synthesize(&self, spec: &Spectrogram) -> Vec<f64> {
        let n = self.window.len();
        let total = spec.frames.len() * self.hop + n;
        let mut out = vec![0.0; total];
        let mut norm = vec![0.0; total];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (f, frame) in spec.frames.iter().enumerate() {
            buf[..frame.len()].copy_from_slice(frame);
            for k in 1..n - frame.len() + 1 {
                buf[n - k] = frame[k].conj();
            }
            self.inverse.process(&mut buf);
            let start = f * self.hop;
            for i in 0..n {
                out[start + i] += buf[i].re / n as f64 * self.window[i];
                norm[start + i] += self.window[i] * self.window[i];
            }
        }
        (0..spec.len)
            .map(|i| {
                let j = i + spec.pad;
                if norm[j] > 1e-9 {
                    out[j] / norm[j]
                } else {
                    0.0
                }
            })
            .collect()
    }
}
