#![allow(dead_code)]

use std::path::{Path, PathBuf};

use foley_core::audio::{save_wav, WavEncoding};
use foley_core::{AudioClip, Diagnostics};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FS: u32 = 48_000;

/// Noise burst held for `sustain_s`, then decaying with time constant `tau_s`.
pub fn burst(seed: u64, amp: f64, lead_s: f64, sustain_s: f64, tau_s: f64, total_s: f64) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (total_s * FS as f64) as usize;
    (0..n)
        .map(|i| {
            let t = i as f64 / FS as f64;
            let env = if t < lead_s {
                0.0
            } else if t < lead_s + sustain_s {
                1.0
            } else {
                (-(t - lead_s - sustain_s) / tau_s).exp()
            };
            (amp * env * rng.random_range(-1.0..1.0)) as f32
        })
        .collect()
}

pub fn stereo_burst(seed: u64, amp: f64, sustain_s: f64, tau_s: f64, total_s: f64) -> AudioClip {
    let l = burst(seed, amp, 0.1, sustain_s, tau_s, total_s);
    let r = burst(seed + 1000, amp, 0.1, sustain_s, tau_s, total_s);
    AudioClip::from_channels(FS, &[l, r]).unwrap()
}

pub fn write_mono(path: &Path, x: Vec<f32>) {
    let clip = AudioClip::from_mono(FS, x).unwrap();
    save_wav(&clip, path, WavEncoding::Float32, &mut Diagnostics::new()).unwrap();
}

/// Writes three sources and a pipeline config for a short scene with a
/// door slam, rain ambience and footsteps. Returns the config path.
pub fn write_fixture_scene(dir: &Path) -> PathBuf {
    let src = dir.join("sources");
    std::fs::create_dir_all(&src).unwrap();
    write_mono(&src.join("door.wav"), burst(1, 0.5, 0.0, 0.05, 0.08, 0.8));
    write_mono(&src.join("rain.wav"), burst(2, 0.2, 0.0, 2.0, 0.01, 2.0));
    let steps: Vec<f32> = (0..3).flat_map(|k| burst(10 + k, 0.4, 0.0, 0.03, 0.04, 0.4)).collect();
    write_mono(&src.join("steps.wav"), steps);
    let config = serde_json::json!({
        "schema_version": 1,
        "seed": 7,
        "context": {
            "duration_s": 4.0,
            "scene_tone": "tense",
            "events": [
                {"description": "door slam", "start_s": 0.5, "end_s": 1.5, "azimuth_hint": 45.0, "depth_hint": 1.0},
                {"description": "rain ambience", "start_s": 0.0, "end_s": 4.0},
                {"description": "footsteps", "start_s": 2.0, "end_s": 3.5, "azimuth_hint": 135.0, "depth_hint": 2.0}
            ]
        },
        "sources": ["sources/door.wav", "sources/rain.wav", "sources/steps.wav"],
        "tot": {"k": 3, "b": 2, "d_max": 3, "tau": 0.99},
        "room": {"preset": "room"},
        "scene": {"environment": "hall", "target_rt60_s": 1.5},
        "fourier": {"m": 8, "sigma": 1.0, "seed": 3},
        "out_dir": "out"
    });
    let path = dir.join("full.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}
