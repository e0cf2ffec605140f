//! Plane-sweep multi-view stereo with a unified depth encoding.
//!
//! The crate estimates per-view depth maps by sweeping fronto-parallel depth
//! hypotheses through a coarse-to-fine cascade, then filters and fuses them
//! into a point cloud. Depth is read out of each cost volume either by
//! regression (soft-argmin), classification (argmax), or *unification*: a
//! sparse per-pixel "unity" column whose single non-zero entry marks the
//! optimal hypothesis and whose magnitude is the proximity of the true depth
//! to it. The [`loss`] module carries the focal-loss family used to supervise
//! such columns, with analytic gradients and a small descent harness in
//! [`optim`].

// Negated comparisons are how NaN inputs get rejected; pixel loops index
// several parallel buffers at once.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod commands;
pub mod depth;
pub mod error;
pub mod fusion;
pub mod geometry;
pub mod io;
pub mod loss;
pub mod optim;
pub mod pipeline;
pub mod reduce;
pub mod scene;
pub mod unity;
pub mod volume;

pub use depth::{DepthMap, Image};
pub use error::{Error, Result};
pub use geometry::{Camera, HypothesisVolume, PixelMap};
pub use unity::{UnityRole, UnityVolume};
