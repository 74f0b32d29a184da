use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use super::AudioClip;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Lowpass,
    Highpass,
    LowShelf,
    HighShelf,
    Peaking,
}

/// Description of an (optionally cascaded) RBJ-cookbook biquad.
///
/// `order` counts poles, so `order / 2` second-order sections are run in
/// series. For cascaded low/high-pass filters the per-section Q values are
/// the Butterworth pole Qs scaled by `q * sqrt(2)`, so `q = 1/sqrt(2)` yields
/// a maximally flat response at any order. For shelves and peaking sections
/// the gain is split evenly across the sections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiquadSpec {
    pub kind: FilterKind,
    pub cutoff_hz: f64,
    pub q: f64,
    #[serde(default)]
    pub gain_db: f64,
    pub order: usize,
}

impl BiquadSpec {
    pub fn butterworth_lowpass(cutoff_hz: f64, order: usize) -> Self {
        Self {
            kind: FilterKind::Lowpass,
            cutoff_hz,
            q: FRAC_1_SQRT_2,
            gain_db: 0.0,
            order,
        }
    }

    pub fn butterworth_highpass(cutoff_hz: f64, order: usize) -> Self {
        Self {
            kind: FilterKind::Highpass,
            ..Self::butterworth_lowpass(cutoff_hz, order)
        }
    }

    pub fn low_shelf(cutoff_hz: f64, gain_db: f64) -> Self {
        Self {
            kind: FilterKind::LowShelf,
            cutoff_hz,
            q: FRAC_1_SQRT_2,
            gain_db,
            order: 2,
        }
    }

    pub fn high_shelf(cutoff_hz: f64, gain_db: f64) -> Self {
        Self {
            kind: FilterKind::HighShelf,
            ..Self::low_shelf(cutoff_hz, gain_db)
        }
    }

    pub fn peaking(center_hz: f64, q: f64, gain_db: f64) -> Self {
        Self {
            kind: FilterKind::Peaking,
            cutoff_hz: center_hz,
            q,
            gain_db,
            order: 2,
        }
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyquist = sample_rate as f64 / 2.0;
        if !(self.cutoff_hz > 0.0 && self.cutoff_hz < nyquist) {
            return Err(Error::validation(format!(
                "cutoff {} Hz outside (0, {nyquist}) Hz",
                self.cutoff_hz
            )));
        }
        if !(self.q > 0.0) {
            return Err(Error::validation("q must be positive"));
        }
        if self.order < 2 || !self.order.is_multiple_of(2) {
            return Err(Error::validation(format!(
                "filter order {} must be even and at least 2",
                self.order
            )));
        }
        if !self.gain_db.is_finite() {
            return Err(Error::validation("gain must be finite"));
        }
        Ok(())
    }
}

/// Normalized second-order section coefficients (a0 == 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Section {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Section {
    pub(crate) fn normalized(b0: f64, b1: f64, b2: f64, a0: f64, a1: f64, a2: f64) -> Self {
        Self {
            b0: b0 / a0,
            b1: b1 / a0,
            b2: b2 / a0,
            a1: a1 / a0,
            a2: a2 / a0,
        }
    }

    fn rbj(kind: FilterKind, f0: f64, q: f64, gain_db: f64, fs: f64) -> Self {
        let w0 = 2.0 * PI * f0 / fs;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * q);
        let a = 10f64.powf(gain_db / 40.0);
        match kind {
            FilterKind::Lowpass => Self::normalized(
                (1.0 - cos) / 2.0,
                1.0 - cos,
                (1.0 - cos) / 2.0,
                1.0 + alpha,
                -2.0 * cos,
                1.0 - alpha,
            ),
            FilterKind::Highpass => Self::normalized(
                (1.0 + cos) / 2.0,
                -(1.0 + cos),
                (1.0 + cos) / 2.0,
                1.0 + alpha,
                -2.0 * cos,
                1.0 - alpha,
            ),
            FilterKind::Peaking => Self::normalized(
                1.0 + alpha * a,
                -2.0 * cos,
                1.0 - alpha * a,
                1.0 + alpha / a,
                -2.0 * cos,
                1.0 - alpha / a,
            ),
            FilterKind::LowShelf => {
                let k = 2.0 * a.sqrt() * alpha;
                Self::normalized(
                    a * ((a + 1.0) - (a - 1.0) * cos + k),
                    2.0 * a * ((a - 1.0) - (a + 1.0) * cos),
                    a * ((a + 1.0) - (a - 1.0) * cos - k),
                    (a + 1.0) + (a - 1.0) * cos + k,
                    -2.0 * ((a - 1.0) + (a + 1.0) * cos),
                    (a + 1.0) + (a - 1.0) * cos - k,
                )
            }
            FilterKind::HighShelf => {
                let k = 2.0 * a.sqrt() * alpha;
                Self::normalized(
                    a * ((a + 1.0) + (a - 1.0) * cos + k),
                    -2.0 * a * ((a - 1.0) + (a + 1.0) * cos),
                    a * ((a + 1.0) + (a - 1.0) * cos - k),
                    (a + 1.0) - (a - 1.0) * cos + k,
                    2.0 * ((a - 1.0) - (a + 1.0) * cos),
                    (a + 1.0) - (a - 1.0) * cos - k,
                )
            }
        }
    }

    /// Direct form I over a whole buffer, zero initial state.
    pub fn run(&self, x: &mut [f64]) {
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        for v in x.iter_mut() {
            let x0 = *v;
            let y0 = self.b0 * x0 + self.b1 * x1 + self.b2 * x2 - self.a1 * y1 - self.a2 * y2;
            x2 = x1;
            x1 = x0;
            y2 = y1;
            y1 = y0;
            *v = y0;
        }
    }
}

/// A validated chain of second-order sections for one sample rate.
#[derive(Debug, Clone)]
pub struct BiquadCascade {
    sections: Vec<Section>,
}

impl BiquadCascade {
    pub fn design(spec: &BiquadSpec, sample_rate: u32) -> Result<Self> {
        spec.validate(sample_rate)?;
        let fs = sample_rate as f64;
        let n = spec.order / 2;
        let sections = (0..n)
            .map(|k| match spec.kind {
                FilterKind::Lowpass | FilterKind::Highpass => {
                    // Butterworth pole pair k of an order-N filter.
                    let theta = PI * (2 * k + 1) as f64 / (2 * spec.order) as f64;
                    let q = spec.q * std::f64::consts::SQRT_2 / (2.0 * theta.sin());
                    Section::rbj(spec.kind, spec.cutoff_hz, q, 0.0, fs)
                }
                _ => Section::rbj(spec.kind, spec.cutoff_hz, spec.q, spec.gain_db / n as f64, fs),
            })
            .collect();
        Ok(Self { sections })
    }

    pub(crate) fn from_sections(sections: Vec<Section>) -> Self {
        Self { sections }
    }

    /// Filters a buffer in place starting from rest.
    pub fn process(&self, x: &mut [f64]) {
        for s in &self.sections {
            s.run(x);
        }
    }
}

/// Filters every channel of `clip` independently from zero state.
pub fn biquad_apply(clip: &AudioClip, spec: &BiquadSpec) -> Result<AudioClip> {
    let cascade = BiquadCascade::design(spec, clip.sample_rate())?;
    Ok(clip.map_channels(|mut ch| {
        cascade.process(&mut ch);
        ch
    }))
}
