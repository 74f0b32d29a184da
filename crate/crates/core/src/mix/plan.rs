use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::analysis::{analyze_track, integrated_loudness, schroeder_rt60, TrackAnalysis};
use super::ops::{apply_dyn_spec, apply_eq_spec, apply_reverb_spec, DynParams, EqParams, ReverbParams};
use crate::audio::AudioClip;
use crate::diag::Diagnostics;
use crate::error::{Error, Result};
use crate::script::{FoleyScript, Layer};
use crate::spatial::{RoomPreset, DEFAULT_WET_RATIO};

pub const DEFAULT_FG_LUFS: f64 = -18.0;
pub const DEFAULT_BG_LUFS: f64 = -28.0;

fn default_fg() -> f64 {
    DEFAULT_FG_LUFS
}

fn default_bg() -> f64 {
    DEFAULT_BG_LUFS
}

/// Acoustic targets for a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneContext {
    pub environment: String,
    pub target_rt60_s: f64,
    #[serde(default = "default_fg")]
    pub fg_lufs: f64,
    #[serde(default = "default_bg")]
    pub bg_lufs: f64,
}

impl SceneContext {
    pub fn for_room(preset: RoomPreset) -> Self {
        Self {
            environment: preset.name().to_string(),
            target_rt60_s: preset.rt60_s(),
            fg_lufs: DEFAULT_FG_LUFS,
            bg_lufs: DEFAULT_BG_LUFS,
        }
    }

    pub fn layer_target(&self, layer: Layer) -> f64 {
        match layer {
            Layer::Fg => self.fg_lufs,
            Layer::Bg => self.bg_lufs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_rt60_s >= 0.0 && self.target_rt60_s.is_finite()) {
            return Err(Error::validation("target rt60 must be non-negative"));
        }
        if !(self.fg_lufs.is_finite() && self.bg_lufs.is_finite()) {
            return Err(Error::validation("layer loudness targets must be finite"));
        }
        Ok(())
    }
}

/// Thresholds of the diagnosis rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub rt60_tolerance_s: f64,
    pub loudness_tolerance_lu: f64,
    /// Bands closer than this between overlapping tracks risk masking.
    pub masking_margin_db: f64,
    /// Bands quieter than this are ignored by the masking rule.
    pub masking_floor_db: f64,
    pub eq_step_db: f64,
    pub limiter_ceiling_dbfs: f64,
    pub reverb_wet_ratio: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            rt60_tolerance_s: 0.3,
            loudness_tolerance_lu: 3.0,
            masking_margin_db: 3.0,
            masking_floor_db: -30.0,
            eq_step_db: 3.0,
            limiter_ceiling_dbfs: -1.0,
            reverb_wet_ratio: DEFAULT_WET_RATIO,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operation {
    Reverb,
    Eq,
    Dyn,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_rev: Option<ReverbParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_eq: Option<EqParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_dyn: Option<DynParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub track_id: u32,
    pub layer: Layer,
    pub operations: Vec<Operation>,
    pub params: PlanParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingPlan {
    #[serde(default = "crate::schema_version")]
    pub schema_version: u32,
    pub entries: Vec<PlanEntry>,
    pub scene: SceneContext,
}

impl MixingPlan {
    pub fn operation_count(&self) -> usize {
        self.entries.iter().map(|e| e.operations.len()).sum()
    }

    pub fn validate(&self, script: &FoleyScript) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if script.event(e.track_id).is_none() {
                return Err(Error::validation(format!(
                    "plan references unknown track {}",
                    e.track_id
                )));
            }
            if !seen.insert(e.track_id) {
                return Err(Error::validation(format!("track {} planned twice", e.track_id)));
            }
            for op in &e.operations {
                let present = match op {
                    Operation::Reverb => e.params.theta_rev.is_some(),
                    Operation::Eq => e.params.theta_eq.is_some(),
                    Operation::Dyn => e.params.theta_dyn.is_some(),
                };
                if !present {
                    return Err(Error::validation(format!(
                        "track {} lists {op:?} without parameters",
                        e.track_id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Analyzes every track in parallel, tagging each with its script event.
pub fn analyze_tracks(
    tracks: &[AudioClip],
    script: &FoleyScript,
    diag: &mut Diagnostics,
) -> Result<Vec<TrackAnalysis>> {
    if tracks.len() != script.events.len() {
        return Err(Error::validation(format!(
            "{} tracks for {} script events",
            tracks.len(),
            script.events.len()
        )));
    }
    let results: Vec<Result<(TrackAnalysis, Diagnostics)>> = tracks
        .par_iter()
        .zip(&script.events)
        .map(|(clip, ev)| {
            let mut d = Diagnostics::new();
            analyze_track(clip, ev.id, &ev.description, &mut d).map(|a| (a, d))
        })
        .collect();
    let mut out = Vec::with_capacity(tracks.len());
    for r in results {
        let (a, d) = r?;
        diag.extend(d);
        out.push(a);
    }
    Ok(out)
}

/// Diagnoses each track against the scene and fills specialist
/// parameters. Masking conflicts boost the dominant track (foreground
/// first, then earlier script position) and cut the other; a track that
/// is cut in a band is never boosted in it.
pub fn plan_mix(
    analyses: &[TrackAnalysis],
    scene: &SceneContext,
    script: &FoleyScript,
    cfg: &PlannerConfig,
) -> Result<MixingPlan> {
    scene.validate()?;
    if analyses.len() != script.events.len() {
        return Err(Error::validation(format!(
            "{} analyses for {} script events",
            analyses.len(),
            script.events.len()
        )));
    }
    for (a, ev) in analyses.iter().zip(&script.events) {
        if a.track_id != ev.id {
            return Err(Error::validation(format!(
                "analysis for track {} does not line up with event {}",
                a.track_id, ev.id
            )));
        }
    }

    let n = analyses.len();
    // Per track and band: +1 boost, -1 cut, 0 untouched.
    let mut eq_moves = vec![[0i8; 3]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (ei, ej) = (&script.events[i], &script.events[j]);
            if !ei.overlaps(ej) {
                continue;
            }
            let (dom, sub) = if ei.layer <= ej.layer { (i, j) } else { (j, i) };
            #[allow(clippy::needless_range_loop)]
            for b in 0..3 {
                let (x, y) = (analyses[i].band_energies[b], analyses[j].band_energies[b]);
                if x > cfg.masking_floor_db && y > cfg.masking_floor_db && (x - y).abs() < cfg.masking_margin_db {
                    eq_moves[sub][b] = -1;
                    if eq_moves[dom][b] == 0 {
                        eq_moves[dom][b] = 1;
                    }
                }
            }
        }
    }

    let entries = analyses
        .iter()
        .zip(&script.events)
        .zip(&eq_moves)
        .map(|((a, ev), moves)| {
            let mut ops = Vec::new();
            let mut params = PlanParams::default();
            if (a.rt60_s - scene.target_rt60_s).abs() > cfg.rt60_tolerance_s {
                ops.push(Operation::Reverb);
                params.theta_rev = Some(ReverbParams {
                    rt60_s: scene.target_rt60_s,
                    wet_ratio: cfg.reverb_wet_ratio,
                });
            }
            if moves.iter().any(|&m| m != 0) {
                let g = |m: i8| m as f64 * cfg.eq_step_db;
                ops.push(Operation::Eq);
                params.theta_eq = Some(EqParams {
                    low_db: g(moves[0]),
                    mid_db: g(moves[1]),
                    high_db: g(moves[2]),
                });
            }
            let target = scene.layer_target(ev.layer);
            if a.lufs.is_finite() && (a.lufs - target).abs() > cfg.loudness_tolerance_lu {
                ops.push(Operation::Dyn);
                params.theta_dyn = Some(DynParams {
                    gain_db: target - a.lufs,
                    limiter_ceiling_dbfs: cfg.limiter_ceiling_dbfs,
                });
            }
            PlanEntry {
                track_id: a.track_id,
                layer: ev.layer,
                operations: ops,
                params,
            }
        })
        .collect();
    Ok(MixingPlan {
        schema_version: crate::SCHEMA_VERSION,
        entries,
        scene: scene.clone(),
    })
}

/// Tracks after the specialists ran, plus the parameters actually used.
#[derive(Debug, Clone)]
pub struct AppliedPlan {
    pub tracks: Vec<AudioClip>,
    pub executed: MixingPlan,
}

const REVERB_CALIBRATION_STEPS: usize = 4;
const REVERB_WET_LADDER: [f64; 3] = [0.5, 0.75, 1.0];

/// Runs the reverb specialist and nudges its decay time (then its wet
/// ratio) until the re-measured RT60 of the whole track lands near the
/// target. The dry part of a track shortens the measured decay, so the
/// nominal parameters alone tend to undershoot.
fn calibrated_reverb(clip: &AudioClip, theta: ReverbParams, tolerance: f64) -> Result<(AudioClip, ReverbParams)> {
    let target = theta.rt60_s;
    let mut best: Option<(f64, AudioClip, ReverbParams)> = None;
    let wets = std::iter::once(theta.wet_ratio).chain(REVERB_WET_LADDER.into_iter().filter(|&w| w > theta.wet_ratio));
    for wet in wets {
        let mut rt = target;
        for _ in 0..REVERB_CALIBRATION_STEPS {
            let p = ReverbParams {
                rt60_s: rt,
                wet_ratio: wet,
            };
            let out = apply_reverb_spec(clip, &p)?;
            let measured = schroeder_rt60(&out).unwrap_or(0.0);
            let err = (measured - target).abs();
            if best.as_ref().is_none_or(|b| err < b.0) {
                best = Some((err, out, p));
            }
            if err <= tolerance / 2.0 || measured <= 0.0 {
                break;
            }
            rt = (rt * target / measured).clamp(0.05, 4.0 * target);
        }
        if best.as_ref().is_some_and(|b| b.0 <= tolerance / 2.0) {
            break;
        }
    }
    let (_, out, p) = best.expect("at least one reverb attempt");
    Ok((out, p))
}

/// Executes a plan grouped by operation: all reverbs, then all EQs, then
/// all dynamics. Dynamics gains are recomputed from the loudness of the
/// already processed track so the layer target is hit after reverb and EQ.
pub fn apply_plan(
    tracks: &[AudioClip],
    plan: &MixingPlan,
    script: &FoleyScript,
    cfg: &PlannerConfig,
    diag: &mut Diagnostics,
) -> Result<AppliedPlan> {
    plan.validate(script)?;
    let index: Vec<usize> = plan
        .entries
        .iter()
        .map(|e| script.events.iter().position(|ev| ev.id == e.track_id).unwrap())
        .collect();
    if let Some(&i) = index.iter().find(|&&i| i >= tracks.len()) {
        return Err(Error::validation(format!("no audio for script event {i}")));
    }
    let mut work: Vec<(AudioClip, PlanEntry)> = plan
        .entries
        .iter()
        .zip(&index)
        .map(|(e, &i)| (tracks[i].clone(), e.clone()))
        .collect();

    for stage in [Operation::Reverb, Operation::Eq, Operation::Dyn] {
        let results: Vec<Result<Diagnostics>> = work
            .par_iter_mut()
            .filter(|(_, e)| e.operations.contains(&stage))
            .map(|(clip, entry)| {
                let mut d = Diagnostics::new();
                match stage {
                    Operation::Reverb => {
                        let theta = entry.params.theta_rev.expect("validated");
                        let current = schroeder_rt60(clip).unwrap_or(0.0);
                        if current > theta.rt60_s + cfg.rt60_tolerance_s {
                            d.warn(
                                "apply_plan",
                                format!(
                                    "track {}: decay {current:.2} s already exceeds target {:.2} s; reverb skipped",
                                    entry.track_id, theta.rt60_s
                                ),
                            );
                            entry.operations.retain(|&o| o != Operation::Reverb);
                            entry.params.theta_rev = None;
                        } else if theta.rt60_s > 0.0 {
                            let (out, used) = calibrated_reverb(clip, theta, cfg.rt60_tolerance_s)?;
                            *clip = out;
                            entry.params.theta_rev = Some(used);
                        }
                    }
                    Operation::Eq => {
                        *clip = apply_eq_spec(clip, &entry.params.theta_eq.expect("validated"))?;
                    }
                    Operation::Dyn => {
                        let mut theta = entry.params.theta_dyn.expect("validated");
                        let current = integrated_loudness(clip, &mut d)?;
                        if current.is_finite() {
                            theta.gain_db = plan.scene.layer_target(entry.layer) - current;
                        }
                        *clip = apply_dyn_spec(clip, &theta)?;
                        entry.params.theta_dyn = Some(theta);
                    }
                }
                Ok(d)
            })
            .collect();
        for r in results {
            diag.extend(r?);
        }
    }

    let (clips, entries): (Vec<_>, Vec<_>) = work.into_iter().unzip();
    let mut out = tracks.to_vec();
    for (clip, &i) in clips.into_iter().zip(&index) {
        out[i] = clip;
    }
    Ok(AppliedPlan {
        tracks: out,
        executed: MixingPlan {
            entries,
            ..plan.clone()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mix::analysis::BAND_FLOOR_DB;
    use crate::script::FoleyEvent;

    fn analysis(id: u32, rt60: f64, lufs: f64, bands: [f64; 3]) -> TrackAnalysis {
        TrackAnalysis {
            track_id: id,
            rt60_s: rt60,
            lufs,
            band_energies: bands,
            semantic_tag: String::new(),
        }
    }

    fn script(events: &[(Layer, f64, f64)]) -> FoleyScript {
        FoleyScript::new(
            events
                .iter()
                .enumerate()
                .map(|(i, &(l, s, e))| FoleyEvent::new(i as u32, format!("event {i}"), l, s, e))
                .collect(),
            "neutral",
        )
    }

    #[test]
    fn matching_track_needs_nothing() {
        let scene = SceneContext::for_room(RoomPreset::Room);
        let plan = plan_mix(
            &[analysis(0, 0.4, -18.0, [-20.0, -20.0, -40.0])],
            &scene,
            &script(&[(Layer::Fg, 0.0, 1.0)]),
            &PlannerConfig::default(),
        )
        .unwrap();
        assert_eq!(plan.operation_count(), 0);
        assert_eq!(plan.entries.len(), 1);
    }

    #[test]
    fn reverb_and_dyn_rules() {
        let scene = SceneContext::for_room(RoomPreset::Hall);
        let plan = plan_mix(
            &[analysis(0, 0.2, -30.0, [BAND_FLOOR_DB; 3])],
            &scene,
            &script(&[(Layer::Fg, 0.0, 1.0)]),
            &PlannerConfig::default(),
        )
        .unwrap();
        let e = &plan.entries[0];
        assert_eq!(e.operations, vec![Operation::Reverb, Operation::Dyn]);
        assert_eq!(e.params.theta_rev.unwrap().rt60_s, 1.5);
        assert!((e.params.theta_dyn.unwrap().gain_db - 12.0).abs() < 1e-12);
        plan.validate(&script(&[(Layer::Fg, 0.0, 1.0)])).unwrap();
    }

    #[test]
    fn masking_rule() {
        let scene = SceneContext::for_room(RoomPreset::Dry);
        let s = script(&[(Layer::Bg, 0.0, 2.0), (Layer::Fg, 1.0, 3.0), (Layer::Fg, 5.0, 6.0)]);
        let a = [
            analysis(0, 0.0, -28.0, [-20.0, -21.0, -50.0]),
            analysis(1, 0.0, -18.0, [-21.0, -10.0, -50.0]),
            analysis(2, 0.0, -18.0, [-20.0, -21.0, -50.0]),
        ];
        let plan = plan_mix(&a, &scene, &s, &PlannerConfig::default()).unwrap();
        let eq = |i: usize| plan.entries[i].params.theta_eq;
        // Only the low band of the overlapping pair is close; fg wins it.
        assert_eq!(
            eq(0),
            Some(EqParams {
                low_db: -3.0,
                mid_db: 0.0,
                high_db: 0.0
            })
        );
        assert_eq!(
            eq(1),
            Some(EqParams {
                low_db: 3.0,
                mid_db: 0.0,
                high_db: 0.0
            })
        );
        assert_eq!(eq(2), None);
    }

    #[test]
    fn misaligned_inputs_fail() {
        let scene = SceneContext::for_room(RoomPreset::Room);
        let s = script(&[(Layer::Fg, 0.0, 1.0), (Layer::Bg, 0.0, 1.0)]);
        let cfg = PlannerConfig::default();
        assert!(plan_mix(&[analysis(0, 0.4, -18.0, [-20.0; 3])], &scene, &s, &cfg).is_err());
        let swapped = [analysis(1, 0.4, -18.0, [-20.0; 3]), analysis(0, 0.4, -18.0, [-20.0; 3])];
        assert!(plan_mix(&swapped, &scene, &s, &cfg).is_err());
    }

    #[test]
    fn silent_track_skips_dynamics() {
        let scene = SceneContext::for_room(RoomPreset::Room);
        let plan = plan_mix(
            &[analysis(0, 0.4, f64::NEG_INFINITY, [BAND_FLOOR_DB; 3])],
            &scene,
            &script(&[(Layer::Bg, 0.0, 1.0)]),
            &PlannerConfig::default(),
        )
        .unwrap();
        assert!(plan.entries[0].operations.is_empty());
    }

    #[test]
    fn plan_json_round_trip() {
        let scene = SceneContext::for_room(RoomPreset::Hall);
        let plan = plan_mix(
            &[analysis(0, 0.2, -30.0, [BAND_FLOOR_DB; 3])],
            &scene,
            &script(&[(Layer::Fg, 0.0, 1.0)]),
            &PlannerConfig::default(),
        )
        .unwrap();
        let text = serde_json::to_string(&plan).unwrap();
        assert!(text.contains("\"operations\":[\"reverb\",\"dyn\"]"));
        assert_eq!(serde_json::from_str::<MixingPlan>(&text).unwrap(), plan);
        let scene: SceneContext = serde_json::from_str(r#"{"environment":"hall","target_rt60_s":1.5}"#).unwrap();
        assert_eq!(scene.fg_lufs, DEFAULT_FG_LUFS);
    }
}
