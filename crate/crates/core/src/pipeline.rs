//! Coarse-to-fine depth estimation for one reference view.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::depth::{DepthMap, Image};
use crate::error::{Error, Result};
use crate::geometry::{refine_hypotheses, sample_hypotheses_uniform, Camera, DepthRange, HypothesisVolume};
use crate::unity::{regress_argmax, regress_softargmin, regress_unity, UnityVolume};
use crate::volume::{
    aggregate_adaptive, aggregate_variance, build_feature_volume, costs_to_scores, extract_features,
    heuristic_view_weights, median_feature_distance, proximity_unity, regularize_costs, CostVolume, FeatureVolume,
    ScoreMode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Variance,
    Adaptive,
}

/// How depth is read out of each stage's cost volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    /// Soft-argmin over the softmax distribution.
    Regression,
    /// Hypothesis with the largest probability.
    Classification,
    /// Sparse unity column with sub-interval proximity.
    Unification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    /// Resolution relative to the input images; its inverse must be an
    /// integer.
    pub fraction: f64,
    pub planes: usize,
    /// Hypothesis spacing in units of the base interval.
    pub interval_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub stages: Vec<StageConfig>,
    pub aggregation: Aggregation,
    pub representation: Representation,
    /// Box-filter radius and pass count of the cost regularisation.
    pub reg_radius: usize,
    pub reg_passes: usize,
    /// Softmax temperature on costs.
    pub temperature: f64,
    /// Weight bandwidth for adaptive aggregation; the median feature
    /// distance when unset.
    pub adaptive_sigma: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let stage = |fraction, planes, interval_ratio| StageConfig {
            fraction,
            planes,
            interval_ratio,
        };
        PipelineConfig {
            stages: vec![stage(0.25, 48, 4.0), stage(0.5, 32, 2.0), stage(1.0, 8, 1.0)],
            aggregation: Aggregation::Variance,
            representation: Representation::Unification,
            reg_radius: 3,
            reg_passes: 1,
            temperature: 3e-5,
            adaptive_sigma: None,
        }
    }
}

impl PipelineConfig {
    fn factor(stage: &StageConfig) -> Result<usize> {
        let inv = 1.0 / stage.fraction;
        let f = inv.round();
        if !(stage.fraction > 0.0 && stage.fraction <= 1.0) || (inv - f).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "pipeline: stage fraction must be 1/n for an integer n, got {}",
                stage.fraction
            )));
        }
        Ok(f as usize)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(format!("pipeline: {m}")));
        if self.stages.is_empty() {
            return cfg("need at least one stage".into());
        }
        let mut prev = 0.0;
        for (i, s) in self.stages.iter().enumerate() {
            Self::factor(s)?;
            if s.fraction < prev {
                return cfg(format!("stage {i}: resolution fractions must not decrease"));
            }
            prev = s.fraction;
            if s.planes < 2 {
                return cfg(format!("stage {i}: need at least 2 planes, got {}", s.planes));
            }
            if !(s.interval_ratio > 0.0 && s.interval_ratio.is_finite()) {
                return cfg(format!("stage {i}: interval_ratio must be positive"));
            }
        }
        if !(self.temperature > 0.0) {
            return cfg(format!("temperature must be positive, got {}", self.temperature));
        }
        if let Some(s) = self.adaptive_sigma {
            if !(s > 0.0) {
                return cfg(format!("adaptive_sigma must be positive, got {s}"));
            }
        }
        Ok(())
    }

    /// Downsampling factor of every stage.
    pub fn factors(&self) -> Result<Vec<usize>> {
        self.stages.iter().map(Self::factor).collect()
    }

    /// Spacing of ratio 1: the first stage spans `range` exactly.
    pub fn base_interval(&self, range: DepthRange) -> f64 {
        let s = &self.stages[0];
        (range.max - range.min) / ((s.planes as f64 - 1.0) * s.interval_ratio)
    }

    /// Check image sizes against the stage factors.
    pub fn check_images(&self, height: usize, width: usize) -> Result<()> {
        for f in self.factors()? {
            if !height.is_multiple_of(f) || !width.is_multiple_of(f) || height / f < 2 || width / f < 2 {
                return Err(Error::Config(format!(
                    "pipeline: {height}x{width} images do not divide into factor {f}"
                )));
            }
        }
        Ok(())
    }
}

/// Result of one stage at that stage's resolution.
#[derive(Debug, Clone)]
pub struct StageOutput {
    pub hypotheses: HypothesisVolume,
    pub depth: DepthMap,
}

#[derive(Debug, Clone)]
pub struct ViewEstimate {
    /// Final depth with confidence in `[0, 1]`.
    pub depth: DepthMap,
    pub stages: Vec<StageOutput>,
}

/// Probability mass on the two hypotheses bracketing each pixel's depth.
fn bracket_confidence(prob: &UnityVolume, hyp: &HypothesisVolume, depth: &mut DepthMap) {
    let conf = depth.confidence.get_or_insert_with(|| vec![0.0; prob.pixels()]);
    for p in 0..prob.pixels() {
        if !depth.mask[p] {
            conf[p] = 0.0;
            continue;
        }
        let d = depth.values[p] as f64;
        let m = (0..hyp.planes()).rposition(|m| hyp.at(m, p) <= d).unwrap_or(0);
        let next = (m + 1).min(hyp.planes() - 1);
        let mass = if next == m {
            prob.at(m, p)
        } else {
            prob.at(m, p) + prob.at(next, p)
        };
        conf[p] = mass.clamp(0.0, 1.0) as f32;
    }
}

fn stage_cost(
    cfg: &PipelineConfig,
    ref_cam: &Camera,
    ref_feat: &crate::volume::FeatureGrid,
    sources: &[(Camera, crate::volume::FeatureGrid)],
    hyp: &HypothesisVolume,
) -> Result<CostVolume> {
    let reference = FeatureVolume::reference(ref_feat, hyp.planes());
    let warped: Vec<FeatureVolume> = sources
        .iter()
        .map(|(cam, feat)| build_feature_volume(feat, ref_cam, cam, hyp))
        .collect::<Result<_>>()?;
    let cost = match cfg.aggregation {
        Aggregation::Variance => {
            let mut all: Vec<&FeatureVolume> = vec![&reference];
            all.extend(warped.iter());
            aggregate_variance(&all)?
        }
        Aggregation::Adaptive => {
            let srcs: Vec<&FeatureVolume> = warped.iter().collect();
            let sigma = match cfg.adaptive_sigma {
                Some(s) => s,
                None => median_feature_distance(&reference, &srcs)
                    .filter(|s| *s > 0.0)
                    .unwrap_or(1.0),
            };
            let weights = srcs
                .iter()
                .map(|s| heuristic_view_weights(&reference, s, sigma))
                .collect::<Result<Vec<_>>>()?;
            aggregate_adaptive(&reference, &srcs, &weights)?
        }
    };
    Ok(regularize_costs(&cost, cfg.reg_radius, cfg.reg_passes))
}

/// Estimate depth for `cameras[reference]` using every other view as a
/// source.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    cameras: &[Camera],
    images: &[Image],
    range: DepthRange,
    reference: usize,
) -> Result<ViewEstimate> {
    cfg.validate()?;
    if cameras.len() != images.len() {
        return Err(Error::shape(cameras.len(), images.len()));
    }
    if cameras.len() < 2 {
        return Err(Error::invalid("cameras", "need a reference and at least one source"));
    }
    if reference >= cameras.len() {
        return Err(Error::invalid(
            "reference",
            format!("{reference} out of {} views", cameras.len()),
        ));
    }
    for (cam, img) in cameras.iter().zip(images) {
        if (cam.height(), cam.width()) != (img.height, img.width) {
            return Err(Error::shape(
                format!("{}x{}", cam.height(), cam.width()),
                format!("{}x{}", img.height, img.width),
            ));
        }
        cfg.check_images(img.height, img.width)?;
    }
    let base = cfg.base_interval(range);
    let mut prev: Option<DepthMap> = None;
    let mut stages = Vec::with_capacity(cfg.stages.len());
    for (s, (stage, factor)) in cfg.stages.iter().zip(cfg.factors()?).enumerate() {
        let ref_cam = cameras[reference].downsampled(factor)?;
        let ref_feat = extract_features(&images[reference], factor)?;
        let sources: Vec<(Camera, crate::volume::FeatureGrid)> = (0..cameras.len())
            .filter(|&i| i != reference)
            .map(|i| Ok((cameras[i].downsampled(factor)?, extract_features(&images[i], factor)?)))
            .collect::<Result<_>>()?;
        let shape = (ref_cam.height(), ref_cam.width());
        let interval = base * stage.interval_ratio;
        let hyp = match &prev {
            None => {
                let mut h = sample_hypotheses_uniform(range.min, interval, stage.planes, shape)?;
                h.stage = s;
                h
            }
            Some(d) => refine_hypotheses(d, stage.planes, interval, shape, range, s)?,
        };
        let cost = stage_cost(cfg, &ref_cam, &ref_feat, &sources, &hyp)?;
        let prob = costs_to_scores(&cost, ScoreMode::Softmax, cfg.temperature)?;
        let mut depth = match cfg.representation {
            Representation::Regression => regress_softargmin(&prob, &hyp)?,
            Representation::Classification => regress_argmax(&prob, &hyp)?,
            Representation::Unification => regress_unity(&proximity_unity(&cost), &hyp)?,
        };
        bracket_confidence(&prob, &hyp, &mut depth);
        prev = Some(depth.clone());
        stages.push(StageOutput { hypotheses: hyp, depth });
    }
    let depth = prev.expect("at least one stage");
    Ok(ViewEstimate { depth, stages })
}

/// Run every view as the reference; views are processed in parallel and
/// returned in input order.
pub fn run_all(
    cfg: &PipelineConfig,
    cameras: &[Camera],
    images: &[Image],
    range: DepthRange,
) -> Result<Vec<ViewEstimate>> {
    (0..cameras.len())
        .into_par_iter()
        .map(|r| run_pipeline(cfg, cameras, images, range, r))
        .collect()
}
