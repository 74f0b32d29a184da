use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FoleyScript;
use crate::error::{Error, Result};

/// Scores of one script on visual alignment, layer separation and tone.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SubScores {
    pub align: f64,
    pub layer: f64,
    pub emotion: f64,
}

impl SubScores {
    pub fn new(align: f64, layer: f64, emotion: f64) -> Self {
        Self { align, layer, emotion }
    }

    pub fn weighted(&self, w: [f64; 3]) -> f64 {
        w[0] * self.align + w[1] * self.layer + w[2] * self.emotion
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeOrigin {
    Root,
    /// Targeted adjustment of the parent script.
    Refinement,
    /// Fresh sibling generated under revised constraints.
    Regeneration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchNode {
    pub id: usize,
    pub script: FoleyScript,
    pub score: f64,
    pub subscores: SubScores,
    pub depth: usize,
    pub parent: Option<usize>,
    pub origin: NodeOrigin,
}

/// Validator verdict; `issues` is fed back to the generator.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Feedback {
    pub ok: bool,
    pub issues: Vec<String>,
    /// Number of the generation this verdict refers to, from 0.
    pub iteration: usize,
}

/// A child proposed by an expander.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub script: FoleyScript,
    pub origin: NodeOrigin,
}

/// Agents may be called from several threads at once unless they report
/// `concurrent() == false`, in which case calls are made one at a time.
pub trait Generator<C>: Send + Sync {
    fn generate(&self, ctx: &C, feedback: Option<&Feedback>) -> Result<FoleyScript>;
    fn concurrent(&self) -> bool {
        true
    }
}

pub trait Validator<C>: Send + Sync {
    fn validate(&self, script: &FoleyScript, ctx: &C) -> Result<Feedback>;
    fn concurrent(&self) -> bool {
        true
    }
}

pub trait Expander<C>: Send + Sync {
    /// Up to `k` children of `node`; extra candidates are ignored.
    fn expand(&self, node: &SearchNode, ctx: &C, k: usize) -> Result<Vec<Candidate>>;
    fn concurrent(&self) -> bool {
        true
    }
}

pub trait Scorer<C>: Send + Sync {
    fn score(&self, script: &FoleyScript, ctx: &C) -> Result<SubScores>;
    fn concurrent(&self) -> bool {
        true
    }
}

pub struct AgentPorts<C> {
    pub generator: Box<dyn Generator<C>>,
    pub validator: Box<dyn Validator<C>>,
    pub expander: Box<dyn Expander<C>>,
    pub scorer: Box<dyn Scorer<C>>,
}

fn agent_error(iteration: usize, e: Error) -> Error {
    match e {
        Error::Agent { .. } => e,
        other => Error::Agent {
            iteration,
            message: other.to_string(),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineOutcome {
    pub script: FoleyScript,
    pub iterations: usize,
    pub converged: bool,
    pub feedback: Vec<Feedback>,
}

/// Generate, validate, and regenerate with the validator's feedback until
/// the script is accepted or `max_iters` generations have been made.
pub fn refine_loop<C: Sync>(ports: &AgentPorts<C>, ctx: &C, max_iters: usize) -> Result<RefineOutcome> {
    if max_iters == 0 {
        return Err(Error::validation("max_iters must be at least 1"));
    }
    let mut history: Vec<Feedback> = Vec::new();
    let mut script = None;
    for k in 0..max_iters {
        let t = ports
            .generator
            .generate(ctx, history.last())
            .map_err(|e| agent_error(k, e))?;
        let mut verdict = ports.validator.validate(&t, ctx).map_err(|e| agent_error(k, e))?;
        verdict.iteration = k;
        let ok = verdict.ok;
        history.push(verdict);
        if ok {
            return Ok(RefineOutcome {
                script: t,
                iterations: k + 1,
                converged: true,
                feedback: history,
            });
        }
        script = Some(t);
    }
    log::info!("refine loop stopped after {max_iters} iterations without acceptance");
    Ok(RefineOutcome {
        script: script.expect("at least one iteration ran"),
        iterations: max_iters,
        converged: false,
        feedback: history,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TotConfig {
    /// Children per expanded node.
    pub k: usize,
    /// Beam width.
    pub b: usize,
    pub d_max: usize,
    /// Search stops once a score exceeds this.
    pub tau: f64,
    pub weights: [f64; 3],
    /// Maximum number of node expansions over the whole search.
    pub budget: Option<usize>,
}

impl Default for TotConfig {
    fn default() -> Self {
        Self {
            k: 3,
            b: 2,
            d_max: 4,
            tau: 0.8,
            weights: [1.0 / 3.0; 3],
            budget: None,
        }
    }
}

impl TotConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.b == 0 {
            return Err(Error::validation("k and b must be at least 1"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::validation("tau must lie in (0, 1]"));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) || (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::validation("weights must be non-negative and sum to 1"));
        }
        Ok(())
    }
}

/// Audit record of a search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    #[serde(default = "crate::schema_version")]
    pub schema_version: u32,
    pub nodes: Vec<SearchNode>,
    /// Node ids kept after pruning at each depth, the incumbent last if it
    /// is not already in the beam.
    pub levels: Vec<Vec<usize>>,
    pub expansions: usize,
    pub best: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub script: FoleyScript,
    pub score: f64,
    pub trace: SearchTrace,
}

/// Higher score first, then older node.
fn ranks_before(a: &SearchNode, b: &SearchNode) -> std::cmp::Ordering {
    b.score.total_cmp(&a.score).then(a.id.cmp(&b.id))
}

fn score_all<C: Sync>(ports: &AgentPorts<C>, ctx: &C, scripts: &[FoleyScript], depth: usize) -> Result<Vec<SubScores>> {
    let run = |s: &FoleyScript| ports.scorer.score(s, ctx).map_err(|e| agent_error(depth, e));
    if ports.scorer.concurrent() {
        scripts.par_iter().map(run).collect()
    } else {
        scripts.iter().map(run).collect()
    }
}

/// Beam search over scripts. Each level expands every beam node into up
/// to `k` children, scores them, and keeps the best `b`. The best node
/// seen so far is retained alongside the beam, so the returned score never
/// drops below the root's. Stops at `d_max`, when a score exceeds `tau`,
/// when the expansion budget runs out, or when no node has children.
pub fn tot_search<C: Sync>(ports: &AgentPorts<C>, ctx: &C, cfg: &TotConfig) -> Result<SearchOutcome> {
    cfg.validate()?;
    let root_script = ports.generator.generate(ctx, None).map_err(|e| agent_error(0, e))?;
    let sub = score_all(ports, ctx, std::slice::from_ref(&root_script), 0)?[0];
    let mut nodes = vec![SearchNode {
        id: 0,
        score: sub.weighted(cfg.weights),
        script: root_script,
        subscores: sub,
        depth: 0,
        parent: None,
        origin: NodeOrigin::Root,
    }];
    let mut beam = vec![0usize];
    let mut levels = vec![vec![0usize]];
    let mut best = 0usize;
    let mut expansions = 0usize;
    let budget = cfg.budget.unwrap_or(usize::MAX);
    let mut depth = 0;

    while depth < cfg.d_max && nodes[best].score <= cfg.tau && expansions < budget {
        let parents: Vec<usize> = beam.iter().copied().take(budget - expansions).collect();
        expansions += parents.len();
        let expand = |&p: &usize| {
            ports
                .expander
                .expand(&nodes[p], ctx, cfg.k)
                .map(|mut c| {
                    c.truncate(cfg.k);
                    (p, c)
                })
                .map_err(|e| agent_error(depth + 1, e))
        };
        let proposals: Vec<(usize, Vec<Candidate>)> = if ports.expander.concurrent() {
            parents.par_iter().map(expand).collect::<Result<_>>()?
        } else {
            parents.iter().map(expand).collect::<Result<_>>()?
        };
        let (owners, candidates): (Vec<usize>, Vec<Candidate>) = proposals
            .into_iter()
            .flat_map(|(p, cs)| cs.into_iter().map(move |c| (p, c)))
            .unzip();
        if candidates.is_empty() {
            break;
        }
        let scripts: Vec<FoleyScript> = candidates.iter().map(|c| c.script.clone()).collect();
        let scores = score_all(ports, ctx, &scripts, depth + 1)?;
        depth += 1;
        let first = nodes.len();
        for ((owner, cand), sub) in owners.into_iter().zip(candidates).zip(scores) {
            nodes.push(SearchNode {
                id: nodes.len(),
                score: sub.weighted(cfg.weights),
                script: cand.script,
                subscores: sub,
                depth,
                parent: Some(owner),
                origin: cand.origin,
            });
        }
        let mut children: Vec<usize> = (first..nodes.len()).collect();
        children.sort_by(|&a, &b| ranks_before(&nodes[a], &nodes[b]));
        children.truncate(cfg.b);
        if ranks_before(&nodes[children[0]], &nodes[best]).is_lt() {
            best = children[0];
        }
        let mut kept = children.clone();
        if !kept.contains(&best) {
            kept.push(best);
        }
        levels.push(kept);
        beam = children;
    }

    let node = &nodes[best];
    Ok(SearchOutcome {
        script: node.script.clone(),
        score: node.score,
        trace: SearchTrace {
            schema_version: crate::SCHEMA_VERSION,
            best,
            expansions,
            levels,
            nodes,
        },
    })
}
