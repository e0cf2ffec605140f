//! Unity encoding of depth: one non-zero entry per pixel marking the optimal
//! hypothesis, valued by how close the true depth sits to it.
//!
//! Also holds the regression (soft-argmin) and classification (argmax)
//! readouts and the offset-based label variant kept for comparison.

use crate::depth::DepthMap;
use crate::error::{Error, Result};
use crate::geometry::HypothesisVolume;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnityRole {
    Label,
    Estimate,
}

impl UnityRole {
    pub fn as_str(self) -> &'static str {
        match self {
            UnityRole::Label => "label",
            UnityRole::Estimate => "estimate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "label" => Some(UnityRole::Label),
            "estimate" => Some(UnityRole::Estimate),
            _ => None,
        }
    }
}

/// `M × H × W` values in `[0, 1]`, plane-major, with a per-pixel mask.
#[derive(Debug, Clone, PartialEq)]
pub struct UnityVolume {
    pub planes: usize,
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
    pub role: UnityRole,
}

impl UnityVolume {
    /// Validate and wrap raw values.
    pub fn new(
        planes: usize,
        height: usize,
        width: usize,
        values: Vec<f64>,
        mask: Vec<bool>,
        role: UnityRole,
    ) -> Result<Self> {
        let hw = height * width;
        if values.len() != planes * hw {
            return Err(Error::shape(planes * hw, values.len()));
        }
        if mask.len() != hw {
            return Err(Error::shape(hw, mask.len()));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(
                "values",
                format!("unity values must lie in [0, 1], got {v}"),
            ));
        }
        let vol = UnityVolume {
            planes,
            height,
            width,
            values,
            mask,
            role,
        };
        if role == UnityRole::Label {
            for p in 0..hw {
                if (0..planes).filter(|&m| vol.at(m, p) > 0.0).count() > 1 {
                    return Err(Error::invalid(
                        "values",
                        format!("label pixel {p} has more than one non-zero"),
                    ));
                }
            }
        }
        Ok(vol)
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn at(&self, m: usize, pixel: usize) -> f64 {
        self.values[m * self.pixels() + pixel]
    }

    /// Index of the largest entry in a pixel's column; ties go to the
    /// smallest index.
    pub fn argmax(&self, pixel: usize) -> usize {
        let mut best = 0;
        for m in 1..self.planes {
            if self.at(m, pixel) > self.at(best, pixel) {
                best = m;
            }
        }
        best
    }

    /// The positive target `q⁺` of each pixel: the largest entry of its
    /// column, or 1 for an all-zero column.
    pub fn positive_targets(&self) -> Vec<f64> {
        (0..self.pixels())
            .map(|p| {
                let q = self.at(self.argmax(p), p);
                if q > 0.0 {
                    q
                } else {
                    1.0
                }
            })
            .collect()
    }

    fn check_hyp(&self, hyp: &HypothesisVolume) -> Result<()> {
        let a = (self.planes, self.height, self.width);
        let b = (hyp.planes(), hyp.height(), hyp.width());
        if a != b {
            return Err(Error::shape(format!("{a:?}"), format!("{b:?}")));
        }
        Ok(())
    }
}

fn empty_depth(h: usize, w: usize) -> DepthMap {
    DepthMap {
        height: h,
        width: w,
        values: vec![0.0; h * w],
        mask: vec![false; h * w],
        confidence: Some(vec![0.0; h * w]),
    }
}

/// Ground-truth unity labels.
///
/// Walks the hypotheses in order keeping a running interval `r`, taken as
/// the gap to the next hypothesis and reused for the last one. The plane
/// with `d_i ≤ D < d_i + r` receives `1 - (D - d_i)/r`; all others are zero.
/// Depths outside every interval give an all-zero (but valid) column.
pub fn generate_unity(gt: &DepthMap, hyp: &HypothesisVolume) -> Result<UnityVolume> {
    gt.check_shape(hyp.height(), hyp.width())?;
    let planes = hyp.planes();
    let hw = gt.len();
    let mut values = vec![0.0; planes * hw];
    for p in 0..hw {
        if !gt.mask[p] {
            continue;
        }
        let d_gt = gt.values[p] as f64;
        let mut r = 0.0;
        for i in 0..planes {
            let d = hyp.at(i, p);
            if i + 1 < planes {
                r = hyp.at(i + 1, p) - d;
            }
            if d <= d_gt && d + r > d_gt {
                values[i * hw + p] = 1.0 - (d_gt - d) / r;
            }
        }
    }
    Ok(UnityVolume {
        planes,
        height: gt.height,
        width: gt.width,
        values,
        mask: gt.mask.clone(),
        role: UnityRole::Label,
    })
}

/// Depth from estimated unity: `D = d_o + (1 - Û_o) · r` at the argmax `o`,
/// where `r` is the interval to the next hypothesis (the previous one for
/// the last plane). Confidence is `Û_o`.
pub fn regress_unity(est: &UnityVolume, hyp: &HypothesisVolume) -> Result<DepthMap> {
    est.check_hyp(hyp)?;
    let planes = est.planes;
    let mut out = empty_depth(est.height, est.width);
    let conf = out.confidence.as_mut().expect("allocated");
    for p in 0..est.pixels() {
        if !est.mask[p] {
            continue;
        }
        let o = est.argmax(p);
        let d = hyp.at(o, p);
        let r = if o + 1 < planes {
            hyp.at(o + 1, p) - d
        } else {
            d - hyp.at(o - 1, p)
        };
        let u = est.at(o, p);
        out.values[p] = (d + (1.0 - u) * r) as f32;
        out.mask[p] = true;
        conf[p] = u as f32;
    }
    Ok(out)
}

/// Soft-argmin: `D = Σ_m d_m P_m`; confidence is `max_m P_m`.
pub fn regress_softargmin(prob: &UnityVolume, hyp: &HypothesisVolume) -> Result<DepthMap> {
    prob.check_hyp(hyp)?;
    let mut out = empty_depth(prob.height, prob.width);
    let conf = out.confidence.as_mut().expect("allocated");
    for p in 0..prob.pixels() {
        if !prob.mask[p] {
            continue;
        }
        let mut depth = 0.0;
        let mut best: f64 = 0.0;
        for m in 0..prob.planes {
            let pm = prob.at(m, p);
            depth += hyp.at(m, p) * pm;
            best = best.max(pm);
        }
        if depth > 0.0 {
            out.values[p] = depth as f32;
            out.mask[p] = true;
            conf[p] = best as f32;
        }
    }
    Ok(out)
}

/// Classification readout: the hypothesis with the largest probability
/// (smallest index on ties); confidence is that probability.
pub fn regress_argmax(prob: &UnityVolume, hyp: &HypothesisVolume) -> Result<DepthMap> {
    prob.check_hyp(hyp)?;
    let mut out = empty_depth(prob.height, prob.width);
    let conf = out.confidence.as_mut().expect("allocated");
    for p in 0..prob.pixels() {
        if !prob.mask[p] {
            continue;
        }
        let o = prob.argmax(p);
        out.values[p] = hyp.at(o, p) as f32;
        out.mask[p] = true;
        conf[p] = prob.at(o, p) as f32;
    }
    Ok(out)
}

/// Offset-style labels, for comparison with proximity labels.
///
/// The target sits at the hypothesis nearest to `D` (smaller index on ties)
/// and holds `|D - d_i| / (r/2)`: the distance to that hypothesis normalised
/// by the half-width of its centred interval, with `r` the local spacing.
pub fn generate_offset_labels(gt: &DepthMap, hyp: &HypothesisVolume) -> Result<UnityVolume> {
    gt.check_shape(hyp.height(), hyp.width())?;
    let planes = hyp.planes();
    let hw = gt.len();
    let mut values = vec![0.0; planes * hw];
    for p in 0..hw {
        if !gt.mask[p] {
            continue;
        }
        let d_gt = gt.values[p] as f64;
        let mut nearest = 0;
        for i in 1..planes {
            if (hyp.at(i, p) - d_gt).abs() < (hyp.at(nearest, p) - d_gt).abs() {
                nearest = i;
            }
        }
        let d = hyp.at(nearest, p);
        let r = if nearest + 1 < planes {
            hyp.at(nearest + 1, p) - d
        } else {
            d - hyp.at(nearest - 1, p)
        };
        let off = (d_gt - d).abs() / (r / 2.0);
        if off <= 1.0 {
            values[nearest * hw + p] = off;
        }
    }
    Ok(UnityVolume {
        planes,
        height: gt.height,
        width: gt.width,
        values,
        mask: gt.mask.clone(),
        role: UnityRole::Label,
    })
}
