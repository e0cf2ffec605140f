use super::{ufl, ufl_grad, UflParams};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// `(u, q, q⁺, stage)` of the worst point.
    pub worst: (f64, f64, f64, usize),
    pub points: usize,
}

/// Relative error with the denominator floored at `1e-3`, so that
/// near-zero gradients are compared absolutely.
pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3)
}

/// Compare [`ufl_grad`] with central differences of step `h` on an
/// `n × n` grid over `u, q ∈ [0.05, 0.95]`, for every stage. Positive
/// points use `q⁺ = q`; each grid `q` also serves as `q⁺` for a negative
/// point `(u, 0)`.
pub fn gradcheck(params: &UflParams, n: usize, h: f64) -> Result<GradCheck> {
    params.validate()?;
    let grid: Vec<f64> = (0..n).map(|i| 0.05 + 0.9 * i as f64 / (n.max(2) - 1) as f64).collect();
    let mut out = GradCheck {
        max_rel_error: 0.0,
        worst: (0.0, 0.0, 0.0, 0),
        points: 0,
    };
    for stage in 0..params.stages() {
        for &u in &grid {
            for &qg in &grid {
                for (q, qp) in [(qg, qg), (0.0, qg)] {
                    let g = ufl_grad(u, q, qp, params, stage)?;
                    let fd = (ufl(u + h, q, qp, params, stage)? - ufl(u - h, q, qp, params, stage)?) / (2.0 * h);
                    let e = rel_error(g, fd);
                    out.points += 1;
                    if e > out.max_rel_error {
                        out.max_rel_error = e;
                        out.worst = (u, q, qp, stage);
                    }
                }
            }
        }
    }
    Ok(out)
}
