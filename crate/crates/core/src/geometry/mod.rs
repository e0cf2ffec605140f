//! Pinhole cameras, plane-sweep warping and depth-hypothesis sampling.

mod camera;
mod hypotheses;
mod warp;

pub use camera::Camera;
pub use hypotheses::{refine_hypotheses, sample_hypotheses_uniform, DepthRange, HypothesisVolume};
pub use warp::{sample_with_bounds_mask, warp_coordinates, PixelMap};
