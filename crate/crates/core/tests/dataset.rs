use std::collections::BTreeMap;
use std::path::Path;

use foley_core::audio::{load_wav, save_wav, WavEncoding};
use foley_core::dataset::{
    build_manifest, build_sample, read_manifest, AzimuthRegion, DatasetConfig, DepthZone, Motion, Position,
    SampleParams, SimilarityPort,
};
use foley_core::metrics::gcc_phat_azimuth;
use foley_core::spatial::RoomPreset;
use foley_core::{AudioClip, Diagnostics, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FS: u32 = 48_000;

fn noise_bursts(seed: u64, secs: f64) -> AudioClip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (secs * FS as f64) as usize;
    let x = (0..n)
        .map(|i| {
            let t = i as f64 / FS as f64;
            let gate = if (t % 0.5) < 0.3 { 1.0 } else { 0.02 };
            (gate * 0.4 * rng.random_range(-1.0..1.0)) as f32
        })
        .collect();
    AudioClip::from_mono(FS, x).unwrap()
}

fn params(start: Position, end: Option<Position>, preset: RoomPreset) -> SampleParams {
    SampleParams {
        seed: 1,
        start,
        motion: if end.is_some() { Motion::Dynamic } else { Motion::Static },
        dynamic_end: end,
        reverb_preset: preset,
        target_s: 9.0,
        categories: BTreeMap::new(),
    }
}

fn pos(region: AzimuthRegion, zone: DepthZone, depth: f64) -> Position {
    Position {
        azimuth_region: region,
        depth_zone: zone,
        depth_m: depth,
    }
}

#[test]
fn static_center_sample() {
    let src = noise_bursts(1, 2.0);
    let p = params(pos(AzimuthRegion::Center, DepthZone::Near, 1.0), None, RoomPreset::Room);
    let s = build_sample(&src, &p, 25.0, &Default::default()).unwrap();
    assert_eq!(s.stereo.channels(), 2);
    assert!(s.stereo.duration_s() >= 9.0);
    assert_eq!(s.trajectory.len(), 225);
    assert!(!s.events.is_empty());
    let az = gcc_phat_azimuth(&s.stereo, 0.17).unwrap();
    assert!((az - 90.0).abs() <= 5.0, "{az}");
}

#[test]
fn dynamic_sweep_flips_sides() {
    let src = noise_bursts(2, 3.0);
    let p = params(
        pos(AzimuthRegion::FarLeft, DepthZone::Near, 1.0),
        Some(pos(AzimuthRegion::FarRight, DepthZone::Near, 1.0)),
        RoomPreset::Room,
    );
    let s = build_sample(&src, &p, 25.0, &Default::default()).unwrap();
    let first = gcc_phat_azimuth(&s.stereo.slice_frames(0, FS as usize), 0.17).unwrap();
    let from = (8 * FS) as usize;
    let last = gcc_phat_azimuth(&s.stereo.slice_frames(from, from + FS as usize), 0.17).unwrap();
    assert!(first < 90.0 && last > 90.0, "{first} {last}");
}

#[test]
fn long_sources_are_trimmed() {
    let src = noise_bursts(3, 11.0);
    let p = params(pos(AzimuthRegion::Left, DepthZone::Mid, 3.0), None, RoomPreset::Hall);
    let s = build_sample(&src, &p, 25.0, &Default::default()).unwrap();
    let tail = RoomPreset::Hall.rt60_s();
    assert!((s.stereo.duration_s() - 9.0 - tail).abs() < 0.01);
}

fn write_sources(dir: &Path) {
    let mut d = Diagnostics::new();
    for (i, name) in ["glass_shatter.wav", "door-knock.wav", "footsteps.wav"]
        .iter()
        .enumerate()
    {
        save_wav(
            &noise_bursts(i as u64 + 10, 1.5),
            dir.join(name),
            WavEncoding::Pcm16,
            &mut d,
        )
        .unwrap();
    }
    let silent = AudioClip::silence(FS, 1, FS as usize).unwrap();
    save_wav(&silent, dir.join("zz_silence.wav"), WavEncoding::Pcm16, &mut d).unwrap();
}

#[test]
fn manifest_build_and_rerun() {
    let sources = tempfile::tempdir().unwrap();
    write_sources(sources.path());
    let out = tempfile::tempdir().unwrap();
    let cfg = DatasetConfig {
        seed: 7,
        qa: true,
        ..Default::default()
    };
    let mut diag = Diagnostics::new();
    let report = build_manifest(sources.path(), &cfg, out.path(), None, &mut diag).unwrap();
    assert_eq!(report.entries.len(), 3);
    assert_eq!(report.skipped.len(), 1);
    assert_eq!(report.skipped[0].reason, "silent");
    assert_eq!(report.entries[0].source_path, "door-knock.wav");
    assert!(report.entries[0].caption.starts_with("door knock, "));

    let entries = read_manifest(&report.manifest_path).unwrap();
    assert_eq!(entries, report.entries);
    for e in &entries {
        let clip = load_wav(out.path().join(&e.rendered_path)).unwrap();
        assert_eq!(clip.channels(), 2);
        assert!(!e.events.is_empty());
        assert!(e.qa.unwrap().passed, "{:?}", e.qa);
    }

    let first = std::fs::read(&report.manifest_path).unwrap();
    let wav = std::fs::read(out.path().join(&entries[1].rendered_path)).unwrap();
    let again = build_manifest(sources.path(), &cfg, out.path(), None, &mut Diagnostics::new()).unwrap();
    assert_eq!(std::fs::read(&again.manifest_path).unwrap(), first);
    assert_eq!(std::fs::read(out.path().join(&entries[1].rendered_path)).unwrap(), wav);
}

#[test]
fn empty_directory_gives_empty_manifest() {
    let sources = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let mut diag = Diagnostics::new();
    let report = build_manifest(sources.path(), &DatasetConfig::default(), out.path(), None, &mut diag).unwrap();
    assert!(report.entries.is_empty());
    assert!(diag.has("build_manifest"));
    assert_eq!(std::fs::read_to_string(report.manifest_path).unwrap(), "");
}

struct RejectKnocks;

impl SimilarityPort for RejectKnocks {
    fn similarity(&self, _: &AudioClip, caption: &str) -> Result<f64> {
        Ok(if caption.contains("knock") { 0.1 } else { 0.9 })
    }
}

#[test]
fn similarity_port_filters() {
    let sources = tempfile::tempdir().unwrap();
    write_sources(sources.path());
    let out = tempfile::tempdir().unwrap();
    let report = build_manifest(
        sources.path(),
        &DatasetConfig::default(),
        out.path(),
        Some(&RejectKnocks),
        &mut Diagnostics::new(),
    )
    .unwrap();
    assert_eq!(report.entries.len(), 2);
    assert!(report.skipped.iter().any(|s| s.reason == "similarity"));
}
