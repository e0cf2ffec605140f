//! Depth-map filtering, multi-view fusion and point-cloud evaluation.

mod eval;
mod filter;
mod fuse;

pub use eval::{evaluate, Metrics};
pub use filter::{
    dynamic_filter, geometric_check, photometric_filter, static_filter, Consistency, FilterParams, ViewCheck,
};
pub use fuse::{fuse, FusionView};

/// Points with per-point colour; the two vectors always have equal length.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<[f64; 3]>,
    pub colors: Vec<[u8; 3]>,
}

impl PointCloud {
    pub fn push(&mut self, point: [f64; 3], color: [u8; 3]) {
        self.points.push(point);
        self.colors.push(color);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
