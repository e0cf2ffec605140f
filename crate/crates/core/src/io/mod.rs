//! File formats: PFM depth/images, PLY clouds, camera text, unity fixtures
//! and the TOML configuration.

pub mod camera_txt;
pub mod config;
pub mod pfm;
pub mod ply;
pub mod unity_bin;
