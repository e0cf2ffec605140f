//! Gradient-descent harness that fits a free score volume to unity labels.
//!
//! Each element's score is an independent parameter, so the fit exercises
//! the pointwise loss and its gradient in isolation from any network.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::HypothesisVolume;
use crate::loss::{LossKind, UflParams};
use crate::reduce::pairwise_mean;
use crate::unity::{regress_unity, UnityRole, UnityVolume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitLoss {
    Bce,
    Fl,
    Gfl,
    Ufl,
}

impl FitLoss {
    pub const COMPARED: [FitLoss; 3] = [FitLoss::Fl, FitLoss::Gfl, FitLoss::Ufl];

    pub fn name(self) -> &'static str {
        match self {
            FitLoss::Bce => "bce",
            FitLoss::Fl => "fl",
            FitLoss::Gfl => "gfl",
            FitLoss::Ufl => "ufl",
        }
    }
}

impl std::str::FromStr for FitLoss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bce" => Ok(FitLoss::Bce),
            "fl" => Ok(FitLoss::Fl),
            "gfl" => Ok(FitLoss::Gfl),
            "ufl" => Ok(FitLoss::Ufl),
            _ => Err(Error::invalid("loss", format!("unknown loss kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// Step size applied to each element's own gradient.
    pub lr: f64,
    pub iters: usize,
    pub loss: FitLoss,
    /// Stage whose `α⁻`/`γ` the loss uses; defaults to the finest of three.
    pub stage: usize,
    /// `α` of the FL and GFL baselines (negatives get `1 - α`).
    pub focal_alpha: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            lr: 1.0,
            iters: 2000,
            loss: FitLoss::Ufl,
            stage: 2,
            focal_alpha: 0.5,
        }
    }
}

impl FitConfig {
    fn kind(&self, params: &UflParams) -> Result<LossKind> {
        let stage = params.stage(self.stage)?;
        Ok(match self.loss {
            FitLoss::Bce => LossKind::Bce,
            FitLoss::Fl => LossKind::Fl {
                alpha: self.focal_alpha,
                gamma: stage.gamma,
            },
            FitLoss::Gfl => LossKind::Gfl {
                alpha: self.focal_alpha,
                gamma: stage.gamma,
            },
            FitLoss::Ufl => LossKind::Ufl(stage),
        })
    }
}

/// Unconstrained scores; `σ(s)` is the induced unity estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVolume {
    pub planes: usize,
    pub height: usize,
    pub width: usize,
    pub scores: Vec<f64>,
}

impl ScoreVolume {
    pub fn zeros(planes: usize, height: usize, width: usize) -> Self {
        ScoreVolume {
            planes,
            height,
            width,
            scores: vec![0.0; planes * height * width],
        }
    }

    /// Sigmoid of the scores, masked like `mask`.
    pub fn unity(&self, mask: &[bool]) -> UnityVolume {
        UnityVolume {
            planes: self.planes,
            height: self.height,
            width: self.width,
            values: self.scores.iter().map(|s| sigmoid(*s)).collect(),
            mask: mask.to_vec(),
            role: UnityRole::Estimate,
        }
    }
}

#[inline]
fn sigmoid(s: f64) -> f64 {
    1.0 / (1.0 + (-s).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub iter: usize,
    pub loss: f64,
    /// Depth MAE against the label-implied depth, when hypotheses are known.
    pub mae: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub scores: ScoreVolume,
    /// One point per state: before the first step and after every step.
    pub trace: Vec<TracePoint>,
}

impl FitResult {
    pub fn initial_loss(&self) -> f64 {
        self.trace[0].loss
    }

    pub fn final_point(&self) -> TracePoint {
        *self.trace.last().expect("trace holds the initial state")
    }

    /// Trace as `iter,loss,mae` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,loss,mae\n");
        for t in &self.trace {
            let mae = t.mae.map(|m| m.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", t.iter, t.loss, mae));
        }
        out
    }
}

/// Depth MAE of an estimate against labels, over pixels whose label column
/// has a positive target.
pub fn depth_mae(estimate: &UnityVolume, labels: &UnityVolume, hyp: &HypothesisVolume) -> Result<Option<f64>> {
    let mut as_est = labels.clone();
    as_est.role = UnityRole::Estimate;
    let truth = regress_unity(&as_est, hyp)?;
    let got = regress_unity(estimate, hyp)?;
    let errs: Vec<f64> = (0..labels.pixels())
        .filter(|&p| labels.mask[p] && estimate.mask[p])
        .filter(|&p| (0..labels.planes).any(|m| labels.at(m, p) > 0.0))
        .map(|p| (got.values[p] as f64 - truth.values[p] as f64).abs())
        .collect();
    Ok(pairwise_mean(&errs))
}

/// Plain full-batch gradient descent on the mean pointwise loss, starting
/// from `s = 0`.
///
/// The step for each element is `lr · ∂ℓ/∂s` of its own term, i.e. the
/// gradient of the mean scaled by the element count, so convergence speed
/// does not depend on the volume size.
pub fn fit_unity(
    labels: &UnityVolume,
    params: &UflParams,
    cfg: &FitConfig,
    hyp: Option<&HypothesisVolume>,
) -> Result<FitResult> {
    if !(cfg.lr > 0.0) {
        return Err(Error::invalid("lr", format!("must be positive, got {}", cfg.lr)));
    }
    let kind = cfg.kind(params)?;
    let eps = params.eps;
    let q_pos = labels.positive_targets();
    let hw = labels.pixels();
    let mut scores = ScoreVolume::zeros(labels.planes, labels.height, labels.width);
    let cells: Vec<(usize, usize)> = (0..labels.planes)
        .flat_map(|m| (0..hw).map(move |p| (m, p)))
        .filter(|&(_, p)| labels.mask[p])
        .collect();

    let mut trace = Vec::with_capacity(cfg.iters + 1);
    let mut terms = vec![0.0; cells.len()];
    let mut grads = vec![0.0; cells.len()];
    for iter in 0..=cfg.iters {
        let s = &scores.scores;
        cells
            .par_iter()
            .zip(terms.par_iter_mut().zip(grads.par_iter_mut()))
            .for_each(|(&(m, p), (term, grad))| {
                let cell = m * hw + p;
                let u = sigmoid(s[cell]);
                let (l, g) = kind.evaluate(u, labels.values[cell], q_pos[p], eps);
                *term = l;
                *grad = g * u * (1.0 - u);
            });
        let loss = pairwise_mean(&terms).unwrap_or(0.0);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { iter, value: loss });
        }
        let mae = match hyp {
            Some(h) => depth_mae(&scores.unity(&labels.mask), labels, h)?,
            None => None,
        };
        trace.push(TracePoint { iter, loss, mae });
        if iter == cfg.iters {
            break;
        }
        for (k, &(m, p)) in cells.iter().enumerate() {
            scores.scores[m * hw + p] -= cfg.lr * grads[k];
        }
    }
    Ok(FitResult { scores, trace })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub loss: FitLoss,
    pub final_loss: f64,
    pub mae: Option<f64>,
}

/// Run [`fit_unity`] once per compared loss kind under the same budget.
pub fn compare_losses(
    labels: &UnityVolume,
    hyp: &HypothesisVolume,
    params: &UflParams,
    cfg: &FitConfig,
) -> Result<Vec<ComparisonRow>> {
    FitLoss::COMPARED
        .iter()
        .map(|&loss| {
            let run = FitConfig { loss, ..cfg.clone() };
            let res = fit_unity(labels, params, &run, None)?;
            let est = res.scores.unity(&labels.mask);
            Ok(ComparisonRow {
                loss,
                final_loss: res.final_point().loss,
                mae: depth_mae(&est, labels, hyp)?,
            })
        })
        .collect()
}

/// Collapse every positive target to 1.
pub fn binarize(labels: &UnityVolume) -> UnityVolume {
    let mut out = labels.clone();
    for v in &mut out.values {
        if *v > 0.0 {
            *v = 1.0;
        }
    }
    out
}

/// Random sparse labels over a uniform sweep (`d_min = 1`, spacing
/// `interval`): each pixel gets one optimal plane and a proximity drawn
/// uniformly from `proximity` (a half-open range inside `(0, 1]`).
pub fn random_labels(
    planes: usize,
    height: usize,
    width: usize,
    interval: f64,
    proximity: (f64, f64),
    seed: u64,
) -> Result<(UnityVolume, HypothesisVolume)> {
    let (lo, hi) = proximity;
    if !(lo > 0.0 && hi <= 1.0 && hi > lo) {
        return Err(Error::invalid(
            "proximity",
            format!("need 0 < lo < hi <= 1, got ({lo}, {hi})"),
        ));
    }
    let hyp = crate::geometry::sample_hypotheses_uniform(1.0, interval, planes, (height, width))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hw = height * width;
    let mut values = vec![0.0; planes * hw];
    for p in 0..hw {
        let o = rng.random_range(0..planes);
        values[o * hw + p] = rng.random_range(lo..hi);
    }
    let labels = UnityVolume::new(planes, height, width, values, vec![true; hw], UnityRole::Label)?;
    Ok((labels, hyp))
}
