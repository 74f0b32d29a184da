//! Foley scripts and their search: a generate/validate refinement loop
//! and a beam search over candidate scripts, both driven by pluggable
//! agent ports.

mod agents;
mod search;
mod types;

pub use agents::{
    default_ports, default_scorer, infer_layer, layer_separation, ContextEvent, HarnessExpander, ReferenceAnnotation,
    ReferenceScorer, RuleValidator, ScriptContext, TemplateGenerator,
};
pub use search::{
    refine_loop, tot_search, AgentPorts, Candidate, Expander, Feedback, Generator, NodeOrigin, RefineOutcome, Scorer,
    SearchNode, SearchOutcome, SearchTrace, SubScores, TotConfig, Validator,
};
pub use types::{FoleyEvent, FoleyScript, Layer};
