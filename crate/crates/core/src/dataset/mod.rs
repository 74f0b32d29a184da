//! Synthesis of spatially annotated samples: seeded spatial parameters,
//! rendering, templated captions, event annotation and a JSON-lines
//! manifest.

mod build;
mod params;

pub use build::{
    build_manifest, build_sample, qa_check, read_manifest, BuiltSample, DatasetConfig, ManifestEntry, ManifestReport,
    QaResult, SimilarityPort, Skipped, DATASET_FPS, MANIFEST_FILE, QA_TOLERANCE_DEG,
};
pub use params::{
    caption_for, sample_params, AzimuthRegion, Categorical, DepthZone, Distribution, Motion, Position, SampleParams,
    DATASET_PRESETS,
};
