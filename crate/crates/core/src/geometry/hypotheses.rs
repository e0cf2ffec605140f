use crate::depth::DepthMap;
use crate::error::{Error, Result};

/// Per-pixel ordered depth hypotheses for one cascade stage.
///
/// Stored plane-major: `depths[m * H * W + y * W + x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisVolume {
    planes: usize,
    height: usize,
    width: usize,
    depths: Vec<f64>,
    pub stage: usize,
}

/// Closed depth interval of the scene, used as the sweep fallback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthRange {
    pub min: f64,
    pub max: f64,
}

impl DepthRange {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min > 0.0 && max > min && max.is_finite()) {
            return Err(Error::invalid(
                "depth range",
                format!("need 0 < min < max, got [{min}, {max}]"),
            ));
        }
        Ok(DepthRange { min, max })
    }
}

impl HypothesisVolume {
    /// Validate and wrap a plane-major depth grid.
    pub fn new(planes: usize, height: usize, width: usize, depths: Vec<f64>, stage: usize) -> Result<Self> {
        if planes < 2 {
            return Err(Error::invalid("planes", format!("need at least 2, got {planes}")));
        }
        if depths.len() != planes * height * width {
            return Err(Error::shape(planes * height * width, depths.len()));
        }
        let hw = height * width;
        for i in 0..hw {
            let mut prev = 0.0;
            for m in 0..planes {
                let d = depths[m * hw + i];
                if !(d > prev) || !d.is_finite() {
                    return Err(Error::invalid(
                        "depths",
                        format!("hypotheses must be positive and strictly increasing (pixel {i}, plane {m})"),
                    ));
                }
                prev = d;
            }
        }
        Ok(HypothesisVolume {
            planes,
            height,
            width,
            depths,
            stage,
        })
    }

    /// Same hypothesis column at every pixel.
    pub fn broadcast(column: &[f64], height: usize, width: usize, stage: usize) -> Result<Self> {
        let hw = height * width;
        let mut depths = Vec::with_capacity(column.len() * hw);
        for d in column {
            depths.extend(std::iter::repeat_n(*d, hw));
        }
        HypothesisVolume::new(column.len(), height, width, depths, stage)
    }

    pub fn planes(&self) -> usize {
        self.planes
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    /// One hypothesis plane as an `H × W` layer.
    pub fn layer(&self, m: usize) -> &[f64] {
        let hw = self.height * self.width;
        &self.depths[m * hw..(m + 1) * hw]
    }

    #[inline]
    pub fn at(&self, m: usize, pixel: usize) -> f64 {
        self.depths[m * self.height * self.width + pixel]
    }

    /// Hypotheses of one pixel, shallow to deep.
    pub fn column(&self, pixel: usize) -> Vec<f64> {
        (0..self.planes).map(|m| self.at(m, pixel)).collect()
    }
}

/// Uniform sweep `d_i = d_min + i · interval` at every pixel.
pub fn sample_hypotheses_uniform(
    d_min: f64,
    interval: f64,
    planes: usize,
    shape: (usize, usize),
) -> Result<HypothesisVolume> {
    if !(d_min > 0.0) {
        return Err(Error::invalid("d_min", format!("must be positive, got {d_min}")));
    }
    if !(interval > 0.0) {
        return Err(Error::invalid("interval", format!("must be positive, got {interval}")));
    }
    let column: Vec<f64> = (0..planes).map(|i| d_min + i as f64 * interval).collect();
    HypothesisVolume::broadcast(&column, shape.0, shape.1, 0)
}

/// Hypotheses centred on the previous stage's depth.
///
/// The previous map is bilinearly upsampled to `shape`; each valid pixel
/// gets `d_i = D + (i - (M-1)/2) · interval`. When that range dips below
/// `range.min` the whole column is shifted up so its first plane sits at
/// `range.min`, keeping spacing and order. Pixels without a previous depth
/// fall back to a uniform sweep over `range`.
pub fn refine_hypotheses(
    prev: &DepthMap,
    planes: usize,
    interval: f64,
    shape: (usize, usize),
    range: DepthRange,
    stage: usize,
) -> Result<HypothesisVolume> {
    if !(interval > 0.0) {
        return Err(Error::invalid("interval", format!("must be positive, got {interval}")));
    }
    if planes < 2 {
        return Err(Error::invalid("planes", format!("need at least 2, got {planes}")));
    }
    let (h, w) = shape;
    let up;
    let prev = if prev.height != h || prev.width != w {
        up = prev.resize_bilinear(h, w);
        &up
    } else {
        prev
    };
    let hw = h * w;
    let half = (planes as f64 - 1.0) / 2.0;
    let fallback_step = (range.max - range.min) / (planes as f64 - 1.0);
    let mut depths = vec![0.0; planes * hw];
    for i in 0..hw {
        if prev.mask[i] {
            let center = prev.values[i] as f64;
            let mut first = center - half * interval;
            if first < range.min {
                first = range.min;
            }
            for m in 0..planes {
                depths[m * hw + i] = first + m as f64 * interval;
            }
        } else {
            for m in 0..planes {
                depths[m * hw + i] = range.min + m as f64 * fallback_step;
            }
        }
    }
    HypothesisVolume::new(planes, h, w, depths, stage)
}
