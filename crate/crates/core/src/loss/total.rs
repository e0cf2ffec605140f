use super::{LossKind, UflParams};
use crate::error::{Error, Result};
use crate::reduce::pairwise_mean;
use crate::unity::UnityVolume;

#[derive(Debug, Clone, PartialEq)]
pub struct TotalLoss {
    pub total: f64,
    /// Mean UFL of each stage before weighting.
    pub per_stage: Vec<f64>,
}

/// Mean UFL over the valid pixels and hypotheses of a stage.
///
/// Returns `None` when the stage has no valid pixel.
pub fn stage_mean(
    estimate: &UnityVolume,
    label: &UnityVolume,
    params: &UflParams,
    stage: usize,
) -> Result<Option<f64>> {
    let shape = |u: &UnityVolume| (u.planes, u.height, u.width);
    if shape(estimate) != shape(label) {
        return Err(Error::shape(
            format!("{:?}", shape(label)),
            format!("{:?}", shape(estimate)),
        ));
    }
    let kind = LossKind::Ufl(params.stage(stage)?);
    let q_pos = label.positive_targets();
    let mut terms = Vec::with_capacity(label.values.len());
    for p in 0..label.pixels() {
        if !(label.mask[p] && estimate.mask[p]) {
            continue;
        }
        for m in 0..label.planes {
            terms.push(kind.evaluate(estimate.at(m, p), label.at(m, p), q_pos[p], params.eps).0);
        }
    }
    Ok(pairwise_mean(&terms))
}

/// Stage-weighted sum of per-stage mean losses, `Σ_i λ_i · mean_i`.
/// A stage without valid pixels contributes zero.
pub fn total_loss(estimates: &[UnityVolume], labels: &[UnityVolume], params: &UflParams) -> Result<TotalLoss> {
    if estimates.len() != labels.len() {
        return Err(Error::shape(labels.len(), estimates.len()));
    }
    if estimates.len() > params.stages() {
        return Err(Error::invalid(
            "estimates",
            format!(
                "{} stages given but parameters cover {}",
                estimates.len(),
                params.stages()
            ),
        ));
    }
    let mut per_stage = Vec::with_capacity(estimates.len());
    let mut total = 0.0;
    for (i, (e, l)) in estimates.iter().zip(labels).enumerate() {
        let mean = stage_mean(e, l, params, i)?.unwrap_or(0.0);
        total += params.lambda[i] * mean;
        per_stage.push(mean);
    }
    Ok(TotalLoss { total, per_stage })
}
