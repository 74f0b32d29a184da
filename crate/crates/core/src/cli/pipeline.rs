use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_json, write_json};
use crate::annotate::{activation_vector, EventSpan};
use crate::audio::{load_wav, loop_pad, save_wav, AudioClip, WavEncoding};
use crate::diag::Diagnostics;
use crate::error::{Error, Result};
use crate::mix::{analyze_tracks, apply_plan, mix_tracks, plan_mix, upmix_51, PlannerConfig, SceneContext};
use crate::script::{default_ports, tot_search, FoleyEvent, ScriptContext, TotConfig};
use crate::spatial::{render_event, RoomPreset, RoomSpec};
use crate::trajectory::{modulate_mask, FourierConfig, FourierFeatures, Trajectory};

/// Frame rate of the per-event trajectories and conditioning output.
pub const PIPELINE_FPS: f64 = 25.0;
const DEFAULT_AZIMUTH_DEG: f64 = 90.0;
const DEFAULT_DEPTH_M: f64 = 1.0;

/// Everything `foley pipeline` needs. Relative paths resolve against the
/// directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default = "crate::schema_version")]
    pub schema_version: u32,
    pub seed: u64,
    pub context: ScriptContext,
    /// One WAV per context event, in event order.
    pub sources: Vec<PathBuf>,
    #[serde(default)]
    pub tot: TotConfig,
    /// Room the events are rendered in; dry by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub room: Option<RoomSpec>,
    /// Mixing targets; defaults to the hall scene.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<SceneContext>,
    #[serde(default)]
    pub planner: PlannerConfig,
    /// Writes per-event conditioning features when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fourier: Option<FourierConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn validate(&self, base: &Path) -> Result<()> {
        self.context.validate()?;
        self.tot.validate()?;
        self.planner_scene().validate()?;
        if let Some(room) = &self.room {
            room.validate()?;
        }
        if let Some(f) = &self.fourier {
            f.validate()?;
        }
        if self.sources.len() != self.context.events.len() {
            return Err(Error::validation(format!(
                "{} sources for {} context events",
                self.sources.len(),
                self.context.events.len()
            )));
        }
        for s in &self.sources {
            let p = base.join(s);
            if !p.is_file() {
                return Err(Error::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("{} not found", p.display()),
                )));
            }
        }
        Ok(())
    }

    fn planner_scene(&self) -> SceneContext {
        self.scene
            .clone()
            .unwrap_or_else(|| SceneContext::for_room(RoomPreset::Hall))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutputs {
    pub script: PathBuf,
    pub trace: PathBuf,
    pub plan: PathBuf,
    pub executed_plan: PathBuf,
    pub mix: PathBuf,
    pub surround: PathBuf,
    pub conditioning: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct EventConditioning {
    id: u32,
    azimuth_deg: f64,
    depth_m: f64,
    activation: Vec<u8>,
    /// Feature vector for active frames; inactive frames use the same
    /// vector scaled by epsilon.
    active: Vec<f64>,
    inactive: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct Conditioning {
    schema_version: u32,
    fps: f64,
    events: Vec<EventConditioning>,
}

fn position(e: &FoleyEvent) -> (f64, f64) {
    (
        e.azimuth_hint.unwrap_or(DEFAULT_AZIMUTH_DEG),
        e.depth_hint.unwrap_or(DEFAULT_DEPTH_M),
    )
}

fn fit_length(clip: &AudioClip, duration_s: f64) -> Result<AudioClip> {
    let target = (duration_s * clip.sample_rate() as f64).round() as usize;
    if clip.frames() >= target {
        Ok(clip.slice_frames(0, target))
    } else {
        loop_pad(clip, duration_s)
    }
}

fn render_one(source: &Path, event: &FoleyEvent, room: &RoomSpec, diag: &mut Diagnostics) -> Result<AudioClip> {
    let mut mono = load_wav(source)?;
    if mono.channels() != 1 {
        diag.info("pipeline", format!("{}: downmixing to mono", source.display()));
        mono = mono.to_mono();
    }
    let mono = fit_length(&mono, event.end_s - event.start_s)?;
    let frames = (mono.duration_s() * PIPELINE_FPS - 1e-9).ceil().max(1.0) as usize;
    let (az, depth) = position(event);
    let traj = Trajectory::constant(PIPELINE_FPS, frames, az, depth)?;
    render_event(&mono, &traj, room)
}

fn conditioning(cfg: &FourierConfig, events: &[FoleyEvent], duration_s: f64) -> Result<Conditioning> {
    let ff = FourierFeatures::new(cfg)?;
    let frames = (duration_s * PIPELINE_FPS).ceil() as usize;
    let events = events
        .iter()
        .map(|e| {
            let (az, depth) = position(e);
            let gamma = ff.encode(ff.normalize(depth, az));
            EventConditioning {
                id: e.id,
                azimuth_deg: az,
                depth_m: depth,
                activation: activation_vector(&[EventSpan::new(e.start_s, e.end_s)], PIPELINE_FPS, frames),
                active: modulate_mask(&gamma, true, cfg.epsilon),
                inactive: modulate_mask(&gamma, false, cfg.epsilon),
            }
        })
        .collect();
    Ok(Conditioning {
        schema_version: crate::SCHEMA_VERSION,
        fps: PIPELINE_FPS,
        events,
    })
}

/// Script search, per-event rendering, mixing plan, mixdown and 5.1
/// upmix. Every output lands in `out_dir`.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    base: &Path,
    out_dir: &Path,
    diag: &mut Diagnostics,
) -> Result<PipelineOutputs> {
    cfg.validate(base)?;
    fs::create_dir_all(out_dir)?;
    let outputs = PipelineOutputs {
        script: out_dir.join("script.json"),
        trace: out_dir.join("trace.json"),
        plan: out_dir.join("plan.json"),
        executed_plan: out_dir.join("executed_plan.json"),
        mix: out_dir.join("mix.wav"),
        surround: out_dir.join("mix51.wav"),
        conditioning: cfg.fourier.map(|_| out_dir.join("conditioning.json")),
    };

    let search = tot_search(&default_ports(cfg.seed), &cfg.context, &cfg.tot)?;
    let script = search.script;
    script.validate(Some(cfg.context.duration_s))?;
    write_json(&outputs.script, &script)?;
    write_json(&outputs.trace, &search.trace)?;

    let room = cfg.room.unwrap_or_else(RoomSpec::dry);
    let tracks = script
        .events
        .iter()
        .map(|e| {
            let src = cfg
                .sources
                .get(e.id as usize)
                .ok_or_else(|| Error::validation(format!("no source for event {}", e.id)))?;
            render_one(&base.join(src), e, &room, diag)
        })
        .collect::<Result<Vec<_>>>()?;

    let scene = cfg.planner_scene();
    let analyses = analyze_tracks(&tracks, &script, diag)?;
    let plan = plan_mix(&analyses, &scene, &script, &cfg.planner)?;
    let applied = apply_plan(&tracks, &plan, &script, &cfg.planner, diag)?;
    write_json(&outputs.plan, &plan)?;
    write_json(&outputs.executed_plan, &applied.executed)?;

    let offsets: Vec<f64> = script.events.iter().map(|e| e.start_s).collect();
    let stereo = mix_tracks(&applied.tracks, &offsets)?;
    save_wav(&stereo, &outputs.mix, WavEncoding::Float32, diag)?;
    save_wav(&upmix_51(&stereo)?, &outputs.surround, WavEncoding::Float32, diag)?;

    if let (Some(f), Some(path)) = (&cfg.fourier, &outputs.conditioning) {
        write_json(path, &conditioning(f, &script.events, cfg.context.duration_s)?)?;
    }
    Ok(outputs)
}
