use super::CostVolume;
use crate::error::{Error, Result};
use crate::unity::{UnityRole, UnityVolume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMode {
    /// `softmax_m(-cost / T)`: a distribution over hypotheses.
    Softmax,
    /// `σ((μ_p - cost_m) / T)` with `μ_p` the pixel's mean valid cost.
    Sigmoid,
}

/// Map matching costs to per-hypothesis scores.
///
/// Invalid cells score zero; a pixel without any valid cell is masked.
/// Reductions over planes run left to right.
pub fn costs_to_scores(cost: &CostVolume, mode: ScoreMode, temperature: f64) -> Result<UnityVolume> {
    if !(temperature > 0.0) {
        return Err(Error::invalid(
            "temperature",
            format!("must be positive, got {temperature}"),
        ));
    }
    let hw = cost.pixels();
    let planes = cost.planes;
    let mut values = vec![0.0; planes * hw];
    let mut mask = vec![false; hw];
    for p in 0..hw {
        let valid: Vec<usize> = (0..planes).filter(|&m| cost.is_valid(cost.cell(m, p))).collect();
        if valid.is_empty() {
            continue;
        }
        mask[p] = true;
        match mode {
            ScoreMode::Softmax => {
                let mut zmax = f64::NEG_INFINITY;
                for &m in &valid {
                    zmax = zmax.max(-cost.values[cost.cell(m, p)] / temperature);
                }
                let mut total = 0.0;
                for &m in &valid {
                    let e = (-cost.values[cost.cell(m, p)] / temperature - zmax).exp();
                    values[cost.cell(m, p)] = e;
                    total += e;
                }
                for &m in &valid {
                    values[cost.cell(m, p)] /= total;
                }
            }
            ScoreMode::Sigmoid => {
                let mut mean = 0.0;
                for &m in &valid {
                    mean += cost.values[cost.cell(m, p)];
                }
                mean /= valid.len() as f64;
                for &m in &valid {
                    let z = (mean - cost.values[cost.cell(m, p)]) / temperature;
                    values[cost.cell(m, p)] = 1.0 / (1.0 + (-z).exp());
                }
            }
        }
    }
    Ok(UnityVolume {
        planes,
        height: cost.height,
        width: cost.width,
        values,
        mask,
        role: UnityRole::Estimate,
    })
}

/// Non-learned unity estimate read directly off the cost curve.
///
/// The cost minimum is refined to a fractional plane index `x` by a
/// three-point parabola; the optimal hypothesis is `o = ⌊x⌋` and it carries
/// the proximity `1 - (x - o)`. Every other plane is zero, so the column has
/// the same sparse form as a generated label. Hypotheses are assumed evenly
/// spaced within a pixel's column, which holds for uniform and refined
/// sweeps. Past the last plane the previous interval is reused.
pub fn proximity_unity(cost: &CostVolume) -> UnityVolume {
    let hw = cost.pixels();
    let planes = cost.planes;
    let mut values = vec![0.0; planes * hw];
    let mut mask = vec![false; hw];
    for p in 0..hw {
        let mut best: Option<(usize, f64)> = None;
        for m in 0..planes {
            let cell = cost.cell(m, p);
            if cost.is_valid(cell) && best.is_none_or(|(_, c)| cost.values[cell] < c) {
                best = Some((m, cost.values[cell]));
            }
        }
        let Some((m0, c0)) = best else { continue };
        mask[p] = true;
        let neighbour = |m: Option<usize>| {
            m.filter(|&m| m < planes)
                .map(|m| cost.cell(m, p))
                .filter(|&cell| cost.is_valid(cell))
                .map(|cell| cost.values[cell])
        };
        let left = neighbour(m0.checked_sub(1));
        let right = neighbour(Some(m0 + 1));
        let offset = match (left, right) {
            (Some(l), Some(r)) => {
                let curv = l - 2.0 * c0 + r;
                if curv > 0.0 {
                    ((l - r) / (2.0 * curv)).clamp(-0.5, 0.5)
                } else {
                    0.0
                }
            }
            _ => 0.0,
        };
        let x = (m0 as f64 + offset).max(0.0);
        let o = (x.floor() as usize).min(planes - 1);
        let proximity = (1.0 - (x - o as f64)).clamp(f64::MIN_POSITIVE, 1.0);
        values[cost.cell(o, p)] = proximity;
    }
    UnityVolume {
        planes,
        height: cost.height,
        width: cost.width,
        values,
        mask,
        role: UnityRole::Estimate,
    }
}
