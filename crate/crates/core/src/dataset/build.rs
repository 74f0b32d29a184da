use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::{caption_for, sample_params, Distribution, Motion, SampleParams};
use crate::annotate::{detect_onsets_with, merge_intervals, EventSpan, OnsetConfig};
use crate::audio::{gate_silence, load_wav, loop_pad, save_wav, spectral_denoise, AudioClip, WavEncoding};
use crate::diag::Diagnostics;
use crate::error::{Error, Result};
use crate::metrics::gcc_phat_azimuth;
use crate::spatial::{render_event, RoomSpec};
use crate::trajectory::Trajectory;

pub const DATASET_FPS: f64 = 25.0;
pub const MANIFEST_FILE: &str = "manifest.jsonl";
/// Largest azimuth error accepted by the dry-render check.
pub const QA_TOLERANCE_DEG: f64 = 5.0;
const QA_WINDOW_S: f64 = 0.5;
const GATE_FALLBACK_DB: f64 = -40.0;

/// Audio-text agreement score in [0, 1], e.g. from a contrastive model.
pub trait SimilarityPort: Send + Sync {
    fn similarity(&self, audio: &AudioClip, caption: &str) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub seed: u64,
    pub distribution: Distribution,
    pub fps: f64,
    pub gate_threshold_db: f64,
    /// Noise cap for spectral denoising of sources; off when absent.
    pub denoise_floor_db: Option<f64>,
    pub onset: OnsetConfig,
    /// Also render a dry copy and check its estimated azimuth.
    pub qa: bool,
    pub similarity_threshold: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            distribution: Distribution::default(),
            fps: DATASET_FPS,
            gate_threshold_db: -40.0,
            denoise_floor_db: None,
            onset: OnsetConfig::default(),
            qa: false,
            similarity_threshold: 0.35,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuiltSample {
    pub stereo: AudioClip,
    pub trajectory: Trajectory,
    pub events: Vec<EventSpan>,
}

fn trajectory_for(params: &SampleParams, frames: usize, fps: f64) -> Result<Trajectory> {
    let s = params.start;
    match params.motion {
        Motion::Static => Trajectory::constant(fps, frames, s.azimuth_deg(), s.depth_m),
        Motion::Dynamic => {
            let e = params.end();
            Trajectory::linear(fps, frames, (s.azimuth_deg(), s.depth_m), (e.azimuth_deg(), e.depth_m))
        }
    }
}

fn padded(source: &AudioClip, target_s: f64) -> Result<AudioClip> {
    if source.channels() != 1 {
        return Err(Error::validation("dataset sources must be mono"));
    }
    let target = (target_s * source.sample_rate() as f64).round() as usize;
    if source.frames() >= target {
        Ok(source.slice_frames(0, target))
    } else {
        loop_pad(source, target_s)
    }
}

/// Loops the source to the target length, renders it along a static or
/// linear trajectory in the sampled room, and annotates events on the
/// unrendered signal.
pub fn build_sample(source: &AudioClip, params: &SampleParams, fps: f64, onset: &OnsetConfig) -> Result<BuiltSample> {
    params.validate()?;
    let mono = padded(source, params.target_s)?;
    let frames = (mono.duration_s() * fps - 1e-9).ceil().max(1.0) as usize;
    let trajectory = trajectory_for(params, frames, fps)?;
    let stereo = render_event(&mono, &trajectory, &RoomSpec::preset(params.reverb_preset))?;
    let mut events = detect_onsets_with(&mono, onset)?;
    if events.is_empty() {
        // Mostly-active sources put the adaptive threshold above their own
        // level; fall back to the fixed-level gate.
        let gated: Vec<EventSpan> = gate_silence(&mono, GATE_FALLBACK_DB)?
            .into_iter()
            .map(|(s, e)| EventSpan::new(s, e))
            .collect();
        events = merge_intervals(&gated, onset.min_gap_s)?;
        for e in &mut events {
            let sr = mono.sample_rate() as f64;
            let seg = mono.slice_frames((e.start_s * sr) as usize, (e.end_s * sr) as usize);
            e.peak_db = 20.0 * (seg.peak() as f64).log10();
        }
    }
    Ok(BuiltSample {
        stereo,
        trajectory,
        events,
    })
}

/// Dry-render azimuth check around the trajectory midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QaResult {
    pub expected_deg: f64,
    pub estimated_deg: Option<f64>,
    pub passed: bool,
}

pub fn qa_check(source: &AudioClip, params: &SampleParams, fps: f64) -> Result<QaResult> {
    let mono = padded(source, params.target_s)?;
    let frames = (mono.duration_s() * fps - 1e-9).ceil().max(1.0) as usize;
    let trajectory = trajectory_for(params, frames, fps)?;
    let dry = render_event(&mono, &trajectory, &RoomSpec::dry())?;
    let mid = mono.duration_s() / 2.0;
    let expected = trajectory.sample_at(mid).azimuth_deg;
    let sr = dry.sample_rate() as f64;
    let a = ((mid - QA_WINDOW_S / 2.0).max(0.0) * sr) as usize;
    let b = (((mid + QA_WINDOW_S / 2.0) * sr) as usize).min(dry.frames());
    let estimated = gcc_phat_azimuth(&dry.slice_frames(a, b), RoomSpec::dry().interaural_m).ok();
    Ok(QaResult {
        expected_deg: expected,
        estimated_deg: estimated,
        passed: estimated.is_some_and(|e| (e - expected).abs() <= QA_TOLERANCE_DEG),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    #[serde(default = "crate::schema_version")]
    pub schema_version: u32,
    pub sample_id: String,
    /// Source file name inside the sources directory.
    pub source_path: String,
    /// Rendered file name inside the output directory.
    pub rendered_path: String,
    pub params: SampleParams,
    pub caption: String,
    pub events: Vec<EventSpan>,
    pub duration_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qa: Option<QaResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub source_path: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct ManifestReport {
    pub manifest_path: PathBuf,
    pub entries: Vec<ManifestEntry>,
    pub skipped: Vec<Skipped>,
}

/// FNV-1a, used to give every source a seed that depends only on its name.
fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn tag_from_stem(stem: &str) -> String {
    let tag: String = stem
        .chars()
        .map(|c| if c == '_' || c == '-' { ' ' } else { c })
        .collect();
    let tag = tag.split_whitespace().collect::<Vec<_>>().join(" ");
    if tag.is_empty() {
        "sound".to_string()
    } else {
        tag
    }
}

enum Outcome {
    Entry(Box<ManifestEntry>),
    Skip(Skipped),
}

fn process_source(
    path: &Path,
    out_dir: &Path,
    cfg: &DatasetConfig,
    similarity: Option<&dyn SimilarityPort>,
    diag: &mut Diagnostics,
) -> Result<Outcome> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or_default()
        .to_string();
    let stem = path
        .file_stem()
        .and_then(|n| n.to_str())
        .unwrap_or("sample")
        .to_string();
    let skip = |reason: &str| {
        Outcome::Skip(Skipped {
            source_path: name.clone(),
            reason: reason.to_string(),
        })
    };
    let mut clip = load_wav(path)?;
    if clip.channels() != 1 {
        diag.info(
            "build_manifest",
            format!("{name}: downmixing {} channels to mono", clip.channels()),
        );
        clip = clip.to_mono();
    }
    let active = gate_silence(&clip, cfg.gate_threshold_db)?;
    let (Some(first), Some(last)) = (active.first(), active.last()) else {
        diag.warn("build_manifest", format!("{name}: skipped (silent)"));
        return Ok(skip("silent"));
    };
    let sr = clip.sample_rate() as f64;
    clip = clip.slice_frames(
        (first.0 * sr) as usize,
        ((last.1 * sr).ceil() as usize).min(clip.frames()),
    );
    if let Some(floor) = cfg.denoise_floor_db {
        clip = spectral_denoise(&clip, floor, diag)?;
    }

    let params = sample_params(cfg.seed ^ name_hash(&name), &cfg.distribution)?;
    let tag = tag_from_stem(&stem);
    let caption = caption_for(&tag, &params);
    let sample = build_sample(&clip, &params, cfg.fps, &cfg.onset)?;
    if let Some(port) = similarity {
        let score = port.similarity(&sample.stereo, &caption)?;
        if score < cfg.similarity_threshold {
            diag.warn("build_manifest", format!("{name}: skipped (similarity {score:.3})"));
            return Ok(skip("similarity"));
        }
    }
    let qa = if cfg.qa {
        let r = qa_check(&clip, &params, cfg.fps)?;
        if !r.passed {
            diag.warn("build_manifest", format!("{name}: dry azimuth check failed ({r:?})"));
        }
        Some(r)
    } else {
        None
    };
    let rendered = format!("{stem}.wav");
    save_wav(&sample.stereo, out_dir.join(&rendered), WavEncoding::Float32, diag)?;
    Ok(Outcome::Entry(Box::new(ManifestEntry {
        schema_version: crate::SCHEMA_VERSION,
        sample_id: stem,
        source_path: name,
        rendered_path: rendered,
        duration_s: sample.stereo.duration_s(),
        params,
        caption,
        events: sample.events,
        qa,
    })))
}

/// Renders every WAV in `sources` (sorted by file name) into `out_dir` and
/// writes a JSON-lines manifest there. Silent sources are skipped.
pub fn build_manifest(
    sources: &Path,
    cfg: &DatasetConfig,
    out_dir: &Path,
    similarity: Option<&dyn SimilarityPort>,
    diag: &mut Diagnostics,
) -> Result<ManifestReport> {
    cfg.distribution.validate()?;
    let mut files: Vec<PathBuf> = fs::read_dir(sources)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    files.sort();
    fs::create_dir_all(out_dir)?;
    if files.is_empty() {
        diag.warn("build_manifest", format!("no WAV sources in {}", sources.display()));
    }

    let results: Vec<Result<(Outcome, Diagnostics)>> = files
        .par_iter()
        .map(|p| {
            let mut d = Diagnostics::new();
            process_source(p, out_dir, cfg, similarity, &mut d).map(|o| (o, d))
        })
        .collect();

    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    let mut text = String::new();
    for r in results {
        let (outcome, d) = r?;
        diag.extend(d);
        match outcome {
            Outcome::Entry(e) => {
                text.push_str(&serde_json::to_string(&e)?);
                text.push('\n');
                entries.push(*e);
            }
            Outcome::Skip(s) => skipped.push(s),
        }
    }
    let manifest_path = out_dir.join(MANIFEST_FILE);
    fs::File::create(&manifest_path)?.write_all(text.as_bytes())?;
    Ok(ManifestReport {
        manifest_path,
        entries,
        skipped,
    })
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}
