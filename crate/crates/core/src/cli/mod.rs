//! The `foley` command line: one subcommand per stage plus an end-to-end
//! `pipeline`.

mod pipeline;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::annotate::{detect_onsets_with, Annotation, OnsetConfig};
use crate::audio::{load_wav, save_wav, AudioClip, WavEncoding};
use crate::dataset::{build_manifest, read_manifest, DatasetConfig, ManifestEntry};
use crate::diag::Diagnostics;
use crate::error::{Error, Result};
use crate::metrics::{
    gcc_phat_azimuth, log_spectral_distance, loudness_error, rt60_error, temporal_iou, ItemMetrics, MetricReport,
};
use crate::mix::{analyze_tracks, apply_plan, mix_tracks, plan_mix, upmix_51, PlannerConfig, SceneContext};
use crate::script::{default_ports, tot_search, FoleyScript, ScriptContext, TotConfig};
use crate::spatial::{render_event, RoomPreset, RoomSpec, DEFAULT_INTERAURAL_M};
use crate::trajectory::TrajectoryFile;

pub use pipeline::{run_pipeline, PipelineConfig, PipelineOutputs};

const LOG_ENV: &str = "FOLEY_LOG";
/// Window around the clip midpoint used for azimuth evaluation.
const EVAL_WINDOW_S: f64 = 0.5;

#[derive(Debug, Parser)]
#[command(name = "foley", version, about = "Spatial Foley rendering, mixing and evaluation")]
struct Cli {
    /// JSON configuration for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run the dry-render azimuth check while building a dataset.
    #[arg(long, global = true)]
    qa: bool,
    /// Where to write the search trace.
    #[arg(long, global = true)]
    trace: Option<PathBuf>,
    /// Where to write the metric report.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a mono event to stereo along a trajectory.
    Render(RenderArgs),
    /// Plan, process and mix stereo tracks for a script.
    Mix(MixArgs),
    /// Upmix a stereo file to 5.1.
    Upmix { input: PathBuf, output: PathBuf },
    /// Detect sound events and write an annotation.
    Annotate(AnnotateArgs),
    /// Build a spatial dataset from a directory of mono sources.
    Dataset(DatasetArgs),
    /// Score rendered samples against a dataset manifest.
    Eval(EvalArgs),
    /// Search for a Foley script from a scene context.
    Script(ScriptArgs),
    /// Run script search, rendering, mixing and upmix from one config.
    Pipeline,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long)]
    input: PathBuf,
    /// Trajectory JSON with visual cues.
    #[arg(long)]
    trajectory: PathBuf,
    /// Room JSON.
    #[arg(long, conflicts_with = "preset")]
    room: Option<PathBuf>,
    #[arg(long, value_parser = parse_preset)]
    preset: Option<RoomPreset>,
}

#[derive(Debug, Args)]
struct MixArgs {
    /// One stereo or mono file per script event, in event order.
    #[arg(long, num_args = 1.., required = true)]
    tracks: Vec<PathBuf>,
    #[arg(long)]
    script: PathBuf,
    /// Scene JSON.
    #[arg(long, conflicts_with = "preset")]
    scene: Option<PathBuf>,
    /// Scene taken from a room preset.
    #[arg(long, value_parser = parse_preset)]
    preset: Option<RoomPreset>,
    /// Also write a 5.1 upmix here.
    #[arg(long)]
    surround: Option<PathBuf>,
    /// Write the executed mixing plan here.
    #[arg(long)]
    plan_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnnotateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 25.0)]
    fps: f64,
}

#[derive(Debug, Args)]
struct DatasetArgs {
    /// Directory of mono WAV sources.
    #[arg(long)]
    sources: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Directory holding predictions named like the manifest renders.
    #[arg(long)]
    pred: PathBuf,
    /// Manifest of the reference dataset.
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Debug, Args)]
struct ScriptArgs {
    #[arg(long)]
    context: PathBuf,
}

fn parse_preset(s: &str) -> std::result::Result<RoomPreset, String> {
    RoomPreset::ALL
        .into_iter()
        .find(|p| p.name() == s)
        .ok_or_else(|| format!("unknown preset {s:?}; expected dry, room, chamber, hall or plate"))
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code: 0 on success, 1 for module errors, 2 for usage errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    init_logging();
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let body = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{body}");
            1
        }
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

fn dispatch(cli: &Cli) -> Result<()> {
    let mut diag = Diagnostics::new();
    match &cli.command {
        Command::Render(a) => render(cli, a, &mut diag),
        Command::Mix(a) => mix(cli, a, &mut diag),
        Command::Upmix { input, output } => {
            let clip = load_wav(input)?;
            save_wav(&upmix_51(&clip)?, output, WavEncoding::Float32, &mut diag)
        }
        Command::Annotate(a) => {
            let cfg: OnsetConfig = optional_json(cli.config.as_deref())?.unwrap_or_default();
            let clip = load_wav(&a.input)?;
            let ann = Annotation::from_clip(&clip, a.fps, &cfg)?;
            emit_json(&ann, cli.out.as_deref())
        }
        Command::Dataset(a) => {
            let mut cfg: DatasetConfig = optional_json(cli.config.as_deref())?.unwrap_or_default();
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            cfg.qa |= cli.qa;
            let out = required(cli.out.as_deref(), "--out")?;
            let report = build_manifest(&a.sources, &cfg, out, None, &mut diag)?;
            log::info!(
                "wrote {} entries to {} ({} skipped)",
                report.entries.len(),
                report.manifest_path.display(),
                report.skipped.len()
            );
            Ok(())
        }
        Command::Eval(a) => {
            let report = evaluate(&a.pred, &a.truth, &mut diag)?;
            emit_json(&report, cli.report.as_deref().or(cli.out.as_deref()))
        }
        Command::Script(a) => {
            let ctx: ScriptContext = read_json(&a.context)?;
            let cfg: TotConfig = optional_json(cli.config.as_deref())?.unwrap_or_default();
            let outcome = tot_search(&default_ports(cli.seed.unwrap_or(0)), &ctx, &cfg)?;
            if let Some(path) = &cli.trace {
                write_json(path, &outcome.trace)?;
            }
            emit_json(&outcome.script, cli.out.as_deref())
        }
        Command::Pipeline => {
            let path = required(cli.config.as_deref(), "--config")?;
            let mut cfg = PipelineConfig::load(path)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            let base = path.parent().unwrap_or(Path::new("."));
            let out_dir = match &cli.out {
                Some(o) => o.clone(),
                None => base.join(cfg.out_dir.as_deref().unwrap_or(Path::new("out"))),
            };
            let outputs = run_pipeline(&cfg, base, &out_dir, &mut diag)?;
            log::info!("pipeline wrote {}", outputs.mix.display());
            Ok(())
        }
    }
}

fn render(cli: &Cli, a: &RenderArgs, diag: &mut Diagnostics) -> Result<()> {
    let out = required(cli.out.as_deref(), "--out")?;
    let mut mono = load_wav(&a.input)?;
    if mono.channels() != 1 {
        diag.info("render", format!("downmixing {} channels to mono", mono.channels()));
        mono = mono.to_mono();
    }
    let traj_file: TrajectoryFile = read_json(&a.trajectory)?;
    let traj = traj_file.build_for_duration(mono.duration_s())?;
    let room = match (&a.room, a.preset) {
        (Some(p), _) => read_json(p)?,
        (None, Some(preset)) => RoomSpec::preset(preset),
        (None, None) => RoomSpec::dry(),
    };
    let stereo = render_event(&mono, &traj, &room)?;
    save_wav(&stereo, out, WavEncoding::Float32, diag)
}

fn mix(cli: &Cli, a: &MixArgs, diag: &mut Diagnostics) -> Result<()> {
    let out = required(cli.out.as_deref(), "--out")?;
    let script: FoleyScript = read_json(&a.script)?;
    script.validate(None)?;
    if a.tracks.len() != script.events.len() {
        return Err(Error::validation(format!(
            "{} tracks for {} script events",
            a.tracks.len(),
            script.events.len()
        )));
    }
    let scene = match (&a.scene, a.preset) {
        (Some(p), _) => read_json(p)?,
        (None, Some(preset)) => SceneContext::for_room(preset),
        (None, None) => return Err(Error::validation("mix needs --scene or --preset")),
    };
    let planner: PlannerConfig = optional_json(cli.config.as_deref())?.unwrap_or_default();
    let tracks = a
        .tracks
        .iter()
        .map(|p| load_wav(p).and_then(|c| c.to_stereo()))
        .collect::<Result<Vec<_>>>()?;
    let analyses = analyze_tracks(&tracks, &script, diag)?;
    let plan = plan_mix(&analyses, &scene, &script, &planner)?;
    let applied = apply_plan(&tracks, &plan, &script, &planner, diag)?;
    let offsets: Vec<f64> = script.events.iter().map(|e| e.start_s).collect();
    let stereo = mix_tracks(&applied.tracks, &offsets)?;
    save_wav(&stereo, out, WavEncoding::Float32, diag)?;
    if let Some(path) = &a.surround {
        save_wav(&upmix_51(&stereo)?, path, WavEncoding::Float32, diag)?;
    }
    if let Some(path) = &a.plan_out {
        write_json(path, &applied.executed)?;
    }
    Ok(())
}

/// Scores every manifest entry whose render is present in `pred_dir`.
///
/// The reference render for an entry sits next to the manifest.
fn evaluate(pred_dir: &Path, manifest: &Path, diag: &mut Diagnostics) -> Result<MetricReport> {
    let entries = read_manifest(manifest)?;
    let truth_dir = manifest.parent().unwrap_or(Path::new("."));
    let mut items = Vec::new();
    for entry in &entries {
        let pred_path = pred_dir.join(&entry.rendered_path);
        if !pred_path.exists() {
            diag.warn("eval", format!("{}: no prediction", entry.sample_id));
            continue;
        }
        let pred = load_wav(&pred_path)?.to_stereo()?;
        let truth = load_wav(truth_dir.join(&entry.rendered_path))?;
        items.push(score_entry(entry, &pred, &truth, diag)?);
    }
    if items.is_empty() {
        return Err(Error::validation("no predictions matched the manifest"));
    }
    Ok(MetricReport::from_items(items))
}

fn score_entry(
    entry: &ManifestEntry,
    pred: &AudioClip,
    truth: &AudioClip,
    diag: &mut Diagnostics,
) -> Result<ItemMetrics> {
    let params = &entry.params;
    let expected = (params.start.azimuth_deg() + params.end().azimuth_deg()) / 2.0;
    let sr = pred.sample_rate() as f64;
    let mid = pred.duration_s() / 2.0;
    let a = ((mid - EVAL_WINDOW_S / 2.0).max(0.0) * sr) as usize;
    let b = (((mid + EVAL_WINDOW_S / 2.0) * sr) as usize).min(pred.frames());
    let estimated = gcc_phat_azimuth(&pred.slice_frames(a, b), DEFAULT_INTERAURAL_M).ok();
    let detected = detect_onsets_with(&pred.to_mono(), &OnsetConfig::default())?;
    Ok(ItemMetrics {
        id: entry.sample_id.clone(),
        azimuth_est_deg: estimated,
        azimuth_true_deg: estimated.map(|_| expected),
        iou: Some(temporal_iou(&detected, &entry.events)),
        loudness_error_lu: loudness_error(pred, truth).ok(),
        lsd_db: log_spectral_distance(pred, truth, diag).ok(),
        rt60_error_s: rt60_error(pred, params.reverb_preset.rt60_s()).ok(),
    })
}

fn required<'a>(p: Option<&'a Path>, flag: &str) -> Result<&'a Path> {
    p.ok_or_else(|| Error::validation(format!("{flag} is required")))
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    Ok(serde_json::from_str(&text)?)
}

fn optional_json<T: DeserializeOwned>(path: Option<&Path>) -> Result<Option<T>> {
    path.map(read_json).transpose()
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes to `path`, or to stdout without one.
fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => write_json(p, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}
