//! Focal-loss family over unity targets.
//!
//! Pointwise kernels take an estimate `u ∈ (0, 1)` and a target `q ∈ [0, 1]`.
//! Every loss here has the form `w(u) · BCE(u, q)`, a modulating weight times
//! binary cross-entropy, which is also how the analytic gradients are built.

mod dedicated;
mod gradcheck;
mod kernels;
mod params;
mod stats;
mod total;

pub use dedicated::DedicatedFn;
pub use gradcheck::{gradcheck, rel_error, GradCheck};
pub use kernels::{bce, bce_grad, focal_loss, gfl, loss_and_grad, ufl, ufl_grad, ufl_naive, LossKind, DEFAULT_EPS};
pub use params::{StageParams, UflParams};
pub use stats::{sample_scaling_stats, scaling_factor_stats, Histogram, ScalingStats, SCALING_BIN_EDGES};
pub use total::{total_loss, TotalLoss};
