//! Feature extraction, feature/cost volumes and their conversion to scores.
//!
//! Features are fixed (intensity plus central-difference gradients) and the
//! cost regulariser is a separable spatial box filter; both stand in for
//! learned networks while keeping the volume arithmetic unchanged.

mod aggregate;
mod features;
mod regularize;
mod scores;

pub use aggregate::{
    aggregate_adaptive, aggregate_variance, build_feature_volume, heuristic_view_weights, median_feature_distance,
    CostVolume, FeatureVolume, WeightVolume,
};
pub use features::{area_downsample, extract_features, FeatureGrid};
pub use regularize::regularize_costs;
pub use scores::{costs_to_scores, proximity_unity, ScoreMode};
