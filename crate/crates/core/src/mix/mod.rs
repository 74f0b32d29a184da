//! Track analysis, rule-based mixing plans, specialist processors,
//! mixdown and 5.1 upmix.

pub mod analysis;
pub mod ops;
pub mod plan;

pub use analysis::{analyze_track, band_energies, integrated_loudness, schroeder_rt60, TrackAnalysis};
pub use ops::{
    apply_dyn_spec, apply_eq_spec, apply_reverb_spec, lfe_channel, mix_tracks, upmix_51, DynParams, EqParams,
    ReverbParams,
};
pub use plan::{
    analyze_tracks, apply_plan, plan_mix, AppliedPlan, MixingPlan, Operation, PlanEntry, PlanParams, PlannerConfig,
    SceneContext,
};
