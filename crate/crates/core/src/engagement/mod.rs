//! Social-approval pipeline: expected-engagement models, residual anchors,
//! windowed toxicity deltas and Mann-Whitney tests.
//!
//! The expectation features include the record's own hate score, so an
//! anchor's residual is measured net of that score.

mod anchors;
mod features;
mod mann_whitney;
mod model;

pub use anchors::{
    detect_anchors, joint_anchors, synth_timelines, toxicity_delta, Aggregator, AnchorDelta, AnchorEvent,
    DeltaConfig, DeltaReport, DeltaSummary, Direction, ResidualScope, SynthTimelineConfig, SynthTimelines,
};
pub use features::{build_tweet_features, engagement_targets, relative_metric, TweetFeatures};
pub use mann_whitney::{mann_whitney, Alternative, MannWhitney, EXACT_MAX_SMALL, EXACT_MAX_TIED_TOTAL};
pub use model::{fit_expectation, r_squared, ExpectationConfig, ExpectationModel, ExpectationReport};
