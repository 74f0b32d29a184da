use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weight given to positional features on inactive frames.
pub const MASK_EPSILON: f64 = 0.1;

/// Random Fourier feature settings. The projection matrix is a pure
/// function of `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierConfig {
    /// Number of frequency bands.
    pub m: usize,
    /// Standard deviation of the projection entries.
    pub sigma: f64,
    pub seed: u64,
    /// Depth normalization bound in meters.
    #[serde(default = "default_d_max")]
    pub d_max: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_d_max() -> f64 {
    10.0
}

fn default_epsilon() -> f64 {
    MASK_EPSILON
}

impl FourierConfig {
    pub fn new(m: usize, sigma: f64, seed: u64) -> Self {
        Self {
            m,
            sigma,
            seed,
            d_max: default_d_max(),
            epsilon: default_epsilon(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::validation("fourier bands m must be at least 1"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::validation("fourier sigma must be positive"));
        }
        if !(self.d_max > 0.0) {
            return Err(Error::validation("d_max must be positive"));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::validation("epsilon must be non-negative"));
        }
        Ok(())
    }
}

/// Immutable projection `B` (m x 2) drawn from N(0, sigma^2).
#[derive(Debug, Clone, PartialEq)]
pub struct FourierFeatures {
    config: FourierConfig,
    projection: Vec<[f64; 2]>,
}

impl FourierFeatures {
    pub fn new(config: &FourierConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let normal = Normal::new(0.0, config.sigma).map_err(|e| Error::validation(format!("fourier sigma: {e}")))?;
        let projection = (0..config.m)
            .map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)])
            .collect();
        Ok(Self {
            config: *config,
            projection,
        })
    }

    pub fn config(&self) -> &FourierConfig {
        &self.config
    }

    pub fn projection(&self) -> &[[f64; 2]] {
        &self.projection
    }

    pub fn dim(&self) -> usize {
        2 * self.config.m
    }

    /// Maps (depth, azimuth) to the unit square.
    pub fn normalize(&self, depth_m: f64, azimuth_deg: f64) -> [f64; 2] {
        [
            (depth_m / self.config.d_max).clamp(0.0, 1.0),
            (azimuth_deg / 180.0).clamp(0.0, 1.0),
        ]
    }

    /// `[cos(2 pi B p); sin(2 pi B p)]`.
    pub fn encode(&self, p: [f64; 2]) -> Vec<f64> {
        let phases: Vec<f64> = self
            .projection
            .iter()
            .map(|b| 2.0 * PI * (b[0] * p[0] + b[1] * p[1]))
            .collect();
        phases
            .iter()
            .map(|v| v.cos())
            .chain(phases.iter().map(|v| v.sin()))
            .collect()
    }
}

/// One-shot Fourier encoding of a normalized point.
pub fn fourier_features(p: [f64; 2], config: &FourierConfig) -> Result<Vec<f64>> {
    Ok(FourierFeatures::new(config)?.encode(p))
}

/// Scales features by `c + epsilon`, i.e. `c * gamma + epsilon * gamma`.
pub fn modulate_mask(features: &[f64], active: bool, epsilon: f64) -> Vec<f64> {
    let c = if active { 1.0 } else { 0.0 };
    features.iter().map(|g| (c + epsilon) * g).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn origin_maps_to_unit_cosines() {
        let cfg = FourierConfig::new(8, 10.0, 42);
        let f = fourier_features([0.0, 0.0], &cfg).unwrap();
        assert_eq!(f.len(), 16);
        assert!(f[..8].iter().all(|&v| v == 1.0));
        assert!(f[8..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn features_are_deterministic() {
        let cfg = FourierConfig::new(16, 5.0, 7);
        let a = fourier_features([0.3, 0.6], &cfg).unwrap();
        let b = fourier_features([0.3, 0.6], &cfg).unwrap();
        assert_eq!(a, b);
        let other = fourier_features([0.3, 0.6], &FourierConfig::new(16, 5.0, 8)).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn config_validation() {
        assert!(FourierConfig::new(0, 1.0, 0).validate().is_err());
        assert!(FourierConfig::new(4, 0.0, 0).validate().is_err());
    }

    #[test]
    fn mask_examples() {
        let f = vec![0.5, -1.0, 0.25];
        assert_eq!(modulate_mask(&f, true, 0.1), vec![1.1 * 0.5, -1.1, 1.1 * 0.25]);
        assert_eq!(modulate_mask(&f, false, 0.1), vec![0.1 * 0.5, -0.1, 0.1 * 0.25]);
        assert!(modulate_mask(&f, false, 0.0).iter().all(|&v| v == 0.0));
    }

    proptest! {
        #[test]
        fn features_bounded_and_lipschitz(
            p in (0.0f64..1.0, 0.0f64..1.0),
            dx in -1e-3f64..1e-3,
            dy in -1e-3f64..1e-3,
            seed in 0u64..100,
        ) {
            let ff = FourierFeatures::new(&FourierConfig::new(8, 3.0, seed)).unwrap();
            let a = ff.encode([p.0, p.1]);
            prop_assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
            let bmax = ff.projection().iter().flat_map(|b| b.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
            let bound = 2.0 * PI * bmax;
            let bx = ff.encode([p.0 + dx, p.1]);
            let by = ff.encode([p.0, p.1 + dy]);
            for i in 0..a.len() {
                prop_assert!((bx[i] - a[i]).abs() <= bound * dx.abs() + 1e-12);
                prop_assert!((by[i] - a[i]).abs() <= bound * dy.abs() + 1e-12);
            }
        }

        #[test]
        fn activation_contributes_one_unit(f in proptest::collection::vec(-1.0f64..1.0, 1..32), eps in 0.0f64..1.0) {
            let on = modulate_mask(&f, true, eps);
            let off = modulate_mask(&f, false, eps);
            for i in 0..f.len() {
                prop_assert!((on[i] - off[i] - f[i]).abs() <= 4.0 * f64::EPSILON);
            }
        }
    }
}
