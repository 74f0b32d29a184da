use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::search::{
    AgentPorts, Candidate, Expander, Feedback, Generator, NodeOrigin, Scorer, SearchNode, SubScores, Validator,
};
use super::{FoleyEvent, FoleyScript, Layer};
use crate::annotate::EventSpan;
use crate::error::{Error, Result};
use crate::metrics::temporal_iou;

/// Ground truth used by the reference scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceAnnotation {
    pub events: Vec<EventSpan>,
    pub tone: String,
}

/// A rough cue taken from the film script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextEvent {
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<Layer>,
    pub start_s: f64,
    pub end_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub azimuth_hint: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_hint: Option<f64>,
}

/// Input to the default agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptContext {
    #[serde(default = "crate::schema_version")]
    pub schema_version: u32,
    pub duration_s: f64,
    #[serde(default)]
    pub scene_tone: String,
    pub events: Vec<ContextEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceAnnotation>,
}

impl ScriptContext {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0) {
            return Err(Error::validation("context duration must be positive"));
        }
        for (i, e) in self.events.iter().enumerate() {
            if !(e.start_s >= 0.0 && e.end_s > e.start_s) {
                return Err(Error::validation(format!("context event {i} has an invalid span")));
            }
        }
        Ok(())
    }
}

const BACKGROUND_WORDS: [&str; 10] = [
    "ambience",
    "ambient",
    "rain",
    "wind",
    "crowd",
    "traffic",
    "hum",
    "room tone",
    "birds",
    "murmur",
];

/// Background for ambience-like descriptions, foreground otherwise.
pub fn infer_layer(description: &str) -> Layer {
    let d = description.to_lowercase();
    if BACKGROUND_WORDS.iter().any(|w| d.contains(w)) {
        Layer::Bg
    } else {
        Layer::Fg
    }
}

fn tone_of(ctx: &ScriptContext) -> String {
    if ctx.scene_tone.is_empty() {
        "neutral".to_string()
    } else {
        ctx.scene_tone.clone()
    }
}

/// Builds a script from the context cues with seeded timing jitter that
/// halves with every round of feedback.
#[derive(Debug, Clone)]
pub struct TemplateGenerator {
    pub seed: u64,
    pub jitter_s: f64,
}

impl TemplateGenerator {
    pub fn new(seed: u64) -> Self {
        Self { seed, jitter_s: 0.25 }
    }

    fn draft(&self, ctx: &ScriptContext, jitter: f64, stream: u64) -> FoleyScript {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        let events = ctx
            .events
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut shift = || {
                    if jitter > 0.0 {
                        rng.random_range(-jitter..=jitter)
                    } else {
                        0.0
                    }
                };
                let start = (c.start_s + shift()).clamp(0.0, ctx.duration_s);
                let end = (c.end_s + shift()).clamp(0.0, ctx.duration_s);
                let (start, end) = if end - start < 0.01 {
                    (c.start_s, c.end_s.min(ctx.duration_s))
                } else {
                    (start, end)
                };
                FoleyEvent {
                    id: i as u32,
                    description: c.description.clone(),
                    layer: c.layer.unwrap_or_else(|| infer_layer(&c.description)),
                    start_s: start,
                    end_s: end,
                    azimuth_hint: c.azimuth_hint,
                    depth_hint: c.depth_hint,
                }
            })
            .collect();
        FoleyScript::new(events, tone_of(ctx))
    }
}

impl Generator<ScriptContext> for TemplateGenerator {
    fn generate(&self, ctx: &ScriptContext, feedback: Option<&Feedback>) -> Result<FoleyScript> {
        ctx.validate()?;
        let round = feedback.map_or(0, |f| f.iteration + 1);
        Ok(self.draft(ctx, self.jitter_s * 0.5f64.powi(round as i32), round as u64))
    }
}

/// Accepts a script whose events sit within `tolerance_s` of their cues
/// and whose overlapping events do not share the foreground.
#[derive(Debug, Clone)]
pub struct RuleValidator {
    pub tolerance_s: f64,
}

impl Default for RuleValidator {
    fn default() -> Self {
        Self { tolerance_s: 0.1 }
    }
}

impl Validator<ScriptContext> for RuleValidator {
    fn validate(&self, script: &FoleyScript, ctx: &ScriptContext) -> Result<Feedback> {
        let mut issues = Vec::new();
        if let Err(e) = script.validate(Some(ctx.duration_s)) {
            issues.push(e.to_string());
        }
        if script.events.len() != ctx.events.len() {
            issues.push(format!("{} events for {} cues", script.events.len(), ctx.events.len()));
        }
        for (e, c) in script.events.iter().zip(&ctx.events) {
            if (e.start_s - c.start_s).abs() > self.tolerance_s || (e.end_s - c.end_s).abs() > self.tolerance_s {
                issues.push(format!("event {} is off its cue", e.id));
            }
        }
        for (i, a) in script.events.iter().enumerate() {
            for b in &script.events[i + 1..] {
                if a.layer == Layer::Fg && b.layer == Layer::Fg && a.overlaps(b) {
                    issues.push(format!("events {} and {} compete in the foreground", a.id, b.id));
                }
            }
        }
        Ok(Feedback {
            ok: issues.is_empty(),
            issues,
            iteration: 0,
        })
    }
}

/// Alternates by depth: even-depth nodes get refined children, odd-depth
/// nodes get regenerated siblings with tighter timing.
#[derive(Debug, Clone)]
pub struct HarnessExpander {
    pub seed: u64,
}

impl HarnessExpander {
    fn refine(&self, node: &SearchNode, ctx: &ScriptContext, strength: f64) -> FoleyScript {
        let mut s = node.script.clone();
        for (e, c) in s.events.iter_mut().zip(&ctx.events) {
            e.start_s += strength * (c.start_s - e.start_s);
            e.end_s += strength * (c.end_s - e.end_s);
        }
        if node.subscores.layer < 1.0 {
            let n = s.events.len();
            for i in 0..n {
                for j in (i + 1)..n {
                    let (a, b) = (&s.events[i], &s.events[j]);
                    if a.layer == b.layer && a.overlaps(b) {
                        let later = if b.start_s >= a.start_s { j } else { i };
                        s.events[later].layer = match s.events[later].layer {
                            Layer::Fg => Layer::Bg,
                            Layer::Bg => Layer::Fg,
                        };
                    }
                }
            }
        }
        if node.subscores.emotion < 1.0 {
            s.scene_tone = tone_of(ctx);
        }
        s
    }
}

impl Expander<ScriptContext> for HarnessExpander {
    fn expand(&self, node: &SearchNode, ctx: &ScriptContext, k: usize) -> Result<Vec<Candidate>> {
        Ok((0..k)
            .map(|i| {
                if node.depth.is_multiple_of(2) {
                    Candidate {
                        script: self.refine(node, ctx, (i + 1) as f64 / (k + 1) as f64),
                        origin: NodeOrigin::Refinement,
                    }
                } else {
                    let generator = TemplateGenerator {
                        seed: self.seed,
                        jitter_s: 0.25 * 0.5f64.powi(node.depth as i32),
                    };
                    let stream = ((node.id as u64) << 16) | i as u64;
                    Candidate {
                        script: generator.draft(ctx, generator.jitter_s, stream),
                        origin: NodeOrigin::Regeneration,
                    }
                }
            })
            .collect())
    }
}

/// Fraction of overlapping event pairs that sit on different layers; 1
/// when nothing overlaps.
pub fn layer_separation(script: &FoleyScript) -> f64 {
    let (mut pairs, mut distinct) = (0usize, 0usize);
    for (i, a) in script.events.iter().enumerate() {
        for b in &script.events[i + 1..] {
            if a.overlaps(b) {
                pairs += 1;
                distinct += (a.layer != b.layer) as usize;
            }
        }
    }
    if pairs == 0 {
        1.0
    } else {
        distinct as f64 / pairs as f64
    }
}

/// Alignment = temporal IoU against the reference spans, layer = layer
/// separation, emotion = 1 when the tone matches the reference tag.
///
/// Without a reference annotation the context cues and scene tone stand in
/// for it.
pub fn default_scorer(script: &FoleyScript, ctx: &ScriptContext) -> Result<SubScores> {
    let (truth, tone) = match &ctx.reference {
        Some(r) => (r.events.clone(), r.tone.clone()),
        None => (
            ctx.events.iter().map(|c| EventSpan::new(c.start_s, c.end_s)).collect(),
            tone_of(ctx),
        ),
    };
    let spans: Vec<EventSpan> = script
        .events
        .iter()
        .map(|e| EventSpan::new(e.start_s, e.end_s))
        .collect();
    let emotion = script.scene_tone.trim().eq_ignore_ascii_case(tone.trim());
    Ok(SubScores {
        align: temporal_iou(&spans, &truth),
        layer: layer_separation(script),
        emotion: emotion as u8 as f64,
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceScorer;

impl Scorer<ScriptContext> for ReferenceScorer {
    fn score(&self, script: &FoleyScript, ctx: &ScriptContext) -> Result<SubScores> {
        default_scorer(script, ctx)
    }
}

/// Deterministic agents for testing and offline use.
pub fn default_ports(seed: u64) -> AgentPorts<ScriptContext> {
    AgentPorts {
        generator: Box::new(TemplateGenerator::new(seed)),
        validator: Box::new(RuleValidator::default()),
        expander: Box::new(HarnessExpander { seed }),
        scorer: Box::new(ReferenceScorer),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::script::{refine_loop, tot_search, TotConfig};

    fn context() -> ScriptContext {
        ScriptContext {
            schema_version: crate::SCHEMA_VERSION,
            duration_s: 8.0,
            scene_tone: "tense".into(),
            events: vec![
                ContextEvent {
                    description: "door slam".into(),
                    layer: None,
                    start_s: 1.0,
                    end_s: 1.6,
                    azimuth_hint: Some(60.0),
                    depth_hint: None,
                },
                ContextEvent {
                    description: "rain ambience".into(),
                    layer: None,
                    start_s: 0.0,
                    end_s: 8.0,
                    azimuth_hint: None,
                    depth_hint: None,
                },
                ContextEvent {
                    description: "footsteps".into(),
                    layer: Some(Layer::Fg),
                    start_s: 3.0,
                    end_s: 5.0,
                    azimuth_hint: None,
                    depth_hint: None,
                },
            ],
            reference: Some(ReferenceAnnotation {
                events: vec![
                    EventSpan::new(1.0, 1.6),
                    EventSpan::new(0.0, 8.0),
                    EventSpan::new(3.0, 5.0),
                ],
                tone: "tense".into(),
            }),
        }
    }

    #[test]
    fn scorer_examples() {
        let ctx = context();
        let exact = TemplateGenerator { seed: 0, jitter_s: 0.0 }
            .generate(&ctx, None)
            .unwrap();
        let s = default_scorer(&exact, &ctx).unwrap();
        assert_eq!((s.align, s.emotion), (1.0, 1.0));

        let both_fg = FoleyScript::new(
            vec![
                FoleyEvent::new(0, "a", Layer::Fg, 0.0, 1.0),
                FoleyEvent::new(1, "b", Layer::Fg, 0.0, 1.0),
            ],
            "calm",
        );
        let s = default_scorer(&both_fg, &ctx).unwrap();
        assert_eq!((s.layer, s.emotion), (0.0, 0.0));

        let mut far = ctx.clone();
        far.reference.as_mut().unwrap().events = vec![EventSpan::new(9.0, 10.0)];
        assert_eq!(default_scorer(&exact, &far).unwrap().align, 0.0);

        // Without a reference the cues and scene tone stand in.
        let mut none = ctx;
        none.reference = None;
        let s = default_scorer(&exact, &none).unwrap();
        assert_eq!(s.align, 1.0);
    }

    #[test]
    fn layers_are_inferred() {
        let ctx = context();
        let s = TemplateGenerator::new(1).generate(&ctx, None).unwrap();
        let layers: Vec<Layer> = s.events.iter().map(|e| e.layer).collect();
        assert_eq!(layers, vec![Layer::Fg, Layer::Bg, Layer::Fg]);
    }

    #[test]
    fn default_refinement_converges() {
        let ctx = context();
        let out = refine_loop(&default_ports(7), &ctx, 8).unwrap();
        assert!(out.converged, "{:?}", out.feedback);
        assert!(out.iterations >= 1);
        out.script.validate(Some(ctx.duration_s)).unwrap();
    }

    #[test]
    fn default_search_is_deterministic_and_improves() {
        let ctx = context();
        let cfg = TotConfig {
            tau: 1.0,
            d_max: 3,
            ..TotConfig::default()
        };
        let a = tot_search(&default_ports(3), &ctx, &cfg).unwrap();
        let b = tot_search(&default_ports(3), &ctx, &cfg).unwrap();
        assert_eq!(a.trace, b.trace);
        assert!(a.score >= a.trace.nodes[0].score);
        assert!(a.trace.nodes.iter().any(|n| n.origin == NodeOrigin::Refinement));
        assert!(a.trace.nodes.iter().any(|n| n.origin == NodeOrigin::Regeneration));
    }

    #[test]
    fn context_json() {
        let ctx = context();
        let text = serde_json::to_string(&ctx).unwrap();
        assert_eq!(serde_json::from_str::<ScriptContext>(&text).unwrap(), ctx);
    }
}
