//! Strided convolutional encoder mapping per-frame modulated features to
//! compressed positional embeddings. Weights are fixed pseudo-random values
//! derived from a seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{modulate_mask, FourierConfig, FourierFeatures};
use super::Trajectory;
use crate::error::{Error, Result};

const KERNEL: usize = 3;
const NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    /// Channels inside the downsampling stack.
    pub hidden: usize,
    /// Channels normalized together.
    pub group_size: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            group_size: 8,
        }
    }
}

/// `T' x d_emb` positional embedding, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionalEmbedding {
    pub frames: usize,
    pub dim: usize,
    pub compression_ratio: usize,
    pub values: Vec<f64>,
}

impl PositionalEmbedding {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }
}

#[derive(Debug, Clone)]
struct Conv {
    out_ch: usize,
    in_ch: usize,
    // [out][in][k]
    weight: Vec<f64>,
    bias: Vec<f64>,
    scale: Vec<f64>,
    shift: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PositionalEncoder {
    blocks: Vec<Conv>,
    proj: Vec<f64>,
    proj_bias: Vec<f64>,
    in_dim: usize,
    out_dim: usize,
    ratio: usize,
    group_size: usize,
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, bound: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-bound..bound)).collect()
}

impl PositionalEncoder {
    /// Builds an encoder with `log2(ratio)` stride-2 blocks.
    pub fn new(in_dim: usize, ratio: usize, out_dim: usize, config: &EncoderConfig, seed: u64) -> Result<Self> {
        if ratio == 0 || !ratio.is_power_of_two() {
            return Err(Error::validation(format!(
                "compression ratio {ratio} must be a power of two"
            )));
        }
        if out_dim == 0 || in_dim == 0 || config.hidden == 0 || config.group_size == 0 {
            return Err(Error::validation("encoder dimensions must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut blocks = Vec::new();
        let mut ch = in_dim;
        for _ in 0..ratio.trailing_zeros() {
            let out_ch = config.hidden;
            let bound = 1.0 / ((ch * KERNEL) as f64).sqrt();
            blocks.push(Conv {
                out_ch,
                in_ch: ch,
                weight: uniform(&mut rng, out_ch * ch * KERNEL, bound),
                bias: uniform(&mut rng, out_ch, bound),
                scale: (0..out_ch).map(|_| 1.0 + rng.random_range(-0.1..0.1)).collect(),
                shift: uniform(&mut rng, out_ch, 0.1),
            });
            ch = out_ch;
        }
        let bound = 1.0 / (ch as f64).sqrt();
        Ok(Self {
            blocks,
            proj: uniform(&mut rng, out_dim * ch, bound),
            proj_bias: uniform(&mut rng, out_dim, bound),
            in_dim,
            out_dim,
            ratio,
            group_size: config.group_size,
        })
    }

    /// Encodes time-major `[T][in_dim]` features into `ceil(T / ratio)` rows.
    pub fn forward(&self, features: &[Vec<f64>]) -> Result<PositionalEmbedding> {
        if features.is_empty() {
            return Err(Error::validation("no frames to encode"));
        }
        if features.iter().any(|f| f.len() != self.in_dim) {
            return Err(Error::validation("feature width mismatch"));
        }
        let mut x: Vec<Vec<f64>> = features.to_vec();
        for block in &self.blocks {
            x = conv_stride2(block, &x);
            group_norm(block, &mut x, self.group_size);
            for row in x.iter_mut() {
                for v in row.iter_mut() {
                    *v *= 1.0 / (1.0 + (-*v).exp());
                }
            }
        }
        let ch = x[0].len();
        let mut values = Vec::with_capacity(x.len() * self.out_dim);
        for row in &x {
            for o in 0..self.out_dim {
                let w = &self.proj[o * ch..(o + 1) * ch];
                values.push(self.proj_bias[o] + w.iter().zip(row).map(|(a, b)| a * b).sum::<f64>());
            }
        }
        Ok(PositionalEmbedding {
            frames: x.len(),
            dim: self.out_dim,
            compression_ratio: self.ratio,
            values,
        })
    }
}

/// Kernel 3, stride 2, one frame of zero padding on each side.
fn conv_stride2(conv: &Conv, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let len = x.len();
    let out_len = len.div_ceil(2);
    (0..out_len)
        .map(|t| {
            (0..conv.out_ch)
                .map(|o| {
                    let mut acc = conv.bias[o];
                    for k in 0..KERNEL {
                        let src = (2 * t + k) as isize - 1;
                        if src < 0 || src as usize >= len {
                            continue;
                        }
                        let row = &x[src as usize];
                        let base = o * conv.in_ch * KERNEL;
                        for (i, v) in row.iter().enumerate() {
                            acc += conv.weight[base + i * KERNEL + k] * v;
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// Normalizes each group of channels over channels and time, then applies
/// the per-channel scale and shift.
fn group_norm(conv: &Conv, x: &mut [Vec<f64>], group_size: usize) {
    let channels = conv.out_ch;
    let mut start = 0;
    while start < channels {
        let end = (start + group_size).min(channels);
        let n = (x.len() * (end - start)) as f64;
        let mean = x.iter().map(|r| r[start..end].iter().sum::<f64>()).sum::<f64>() / n;
        let var = x
            .iter()
            .map(|r| r[start..end].iter().map(|v| (v - mean).powi(2)).sum::<f64>())
            .sum::<f64>()
            / n;
        let inv = 1.0 / (var + NORM_EPS).sqrt();
        for row in x.iter_mut() {
            for (c, v) in row.iter_mut().enumerate().take(end).skip(start) {
                *v = (*v - mean) * inv * conv.scale[c] + conv.shift[c];
            }
        }
        start = end;
    }
}

/// Fourier-encodes every trajectory frame, applies activation modulation
/// and compresses time by `ratio` with a seeded encoder.
pub fn encode_positions(
    traj: &Trajectory,
    fourier: &FourierConfig,
    ratio: usize,
    d_emb: usize,
    enc_seed: u64,
) -> Result<PositionalEmbedding> {
    encode_positions_with(traj, fourier, ratio, d_emb, enc_seed, &EncoderConfig::default())
}

pub fn encode_positions_with(
    traj: &Trajectory,
    fourier: &FourierConfig,
    ratio: usize,
    d_emb: usize,
    enc_seed: u64,
    config: &EncoderConfig,
) -> Result<PositionalEmbedding> {
    let ff = FourierFeatures::new(fourier)?;
    let features: Vec<Vec<f64>> = traj
        .points()
        .iter()
        .map(|p| {
            let gamma = ff.encode(ff.normalize(p.depth_m, p.azimuth_deg));
            modulate_mask(&gamma, p.active, fourier.epsilon)
        })
        .collect();
    PositionalEncoder::new(ff.dim(), ratio, d_emb, config, enc_seed)?.forward(&features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::apply_activation;

    fn small() -> EncoderConfig {
        EncoderConfig {
            hidden: 12,
            group_size: 8,
        }
    }

    #[test]
    fn compresses_time() {
        let t = Trajectory::linear(25.0, 160, (45.0, 1.0), (135.0, 4.0)).unwrap();
        let e = encode_positions(&t, &FourierConfig::new(8, 4.0, 1), 16, 32, 9).unwrap();
        assert_eq!(e.frames, 10);
        assert_eq!(e.values.len(), 10 * 32);
        assert!(e.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn short_input_gives_single_row() {
        let t = Trajectory::constant(25.0, 3, 90.0, 2.0).unwrap();
        let e = encode_positions_with(&t, &FourierConfig::new(4, 2.0, 1), 16, 8, 0, &small()).unwrap();
        assert_eq!(e.frames, 1);
    }

    #[test]
    fn sensitive_to_mask_and_deterministic() {
        let t = Trajectory::linear(25.0, 64, (60.0, 1.0), (120.0, 3.0)).unwrap();
        let mut act = vec![1u8; 64];
        act[17] = 0;
        let masked = apply_activation(&t, &act).unwrap();
        let cfg = FourierConfig::new(8, 4.0, 3);
        let a = encode_positions_with(&t, &cfg, 8, 16, 5, &small()).unwrap();
        let b = encode_positions_with(&masked, &cfg, 8, 16, 5, &small()).unwrap();
        let a2 = encode_positions_with(&t, &cfg, 8, 16, 5, &small()).unwrap();
        assert_ne!(a, b);
        assert_eq!(a, a2);
    }

    #[test]
    fn rejects_non_power_of_two() {
        let t = Trajectory::constant(25.0, 8, 90.0, 2.0).unwrap();
        assert!(encode_positions(&t, &FourierConfig::new(4, 2.0, 1), 3, 8, 0).is_err());
        assert!(encode_positions(&t, &FourierConfig::new(4, 2.0, 1), 0, 8, 0).is_err());
    }
}
