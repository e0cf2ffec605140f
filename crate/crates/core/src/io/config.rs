//! TOML configuration with one section per module. Every key is optional
//! and falls back to its default.
//!
//! ```toml
//! [scene]
//! kind = "plane"
//! views = 5
//!
//! [pipeline]
//! representation = "unification"
//! [[pipeline.stages]]
//! fraction = 0.25
//! planes = 48
//! interval_ratio = 4.0
//!
//! [loss]
//! gamma = [2.0, 1.0, 0.0]
//!
//! [filter]
//! conf_threshold = 0.3
//!
//! [fit]
//! iters = 2000
//!
//! [eval]
//! dist_cap = 2.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::FilterParams;
use crate::loss::UflParams;
use crate::optim::FitConfig;
use crate::pipeline::PipelineConfig;
use crate::scene::SceneConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Distance cap; 20 finest intervals when unset.
    pub dist_cap: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub scene: SceneConfig,
    pub pipeline: PipelineConfig,
    pub loss: UflParams,
    pub filter: FilterParams,
    pub fit: FitConfig,
    pub eval: EvalConfig,
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.pipeline.validate()?;
        self.loss.validate()?;
        self.filter.validate()?;
        if let Some(c) = self.eval.dist_cap {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("eval: dist_cap must be positive, got {c}")));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Config::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Finest hypothesis spacing of the configured cascade.
    pub fn finest_interval(&self) -> Result<f64> {
        let range = self.scene.depth_range()?;
        let base = self.pipeline.base_interval(range);
        let last = self
            .pipeline
            .stages
            .last()
            .ok_or_else(|| Error::Config("pipeline: need at least one stage".into()))?;
        Ok(base * last.interval_ratio)
    }

    pub fn dist_cap(&self) -> Result<f64> {
        match self.eval.dist_cap {
            Some(c) => Ok(c),
            None => Ok(20.0 * self.finest_interval()?),
        }
    }
}
