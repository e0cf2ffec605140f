use crate::depth::Image;
use crate::error::{Error, Result};

/// `channels × H × W` feature maps with a per-pixel validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl FeatureGrid {
    pub fn channel(&self, c: usize) -> &[f64] {
        let hw = self.height * self.width;
        &self.values[c * hw..(c + 1) * hw]
    }
}

/// Mean over non-overlapping `factor × factor` blocks; trailing rows and
/// columns that do not fill a block are dropped.
pub fn area_downsample(data: &[f64], height: usize, width: usize, factor: usize) -> (Vec<f64>, usize, usize) {
    if factor <= 1 {
        return (data.to_vec(), height, width);
    }
    let (h, w) = (height / factor, width / factor);
    let norm = (factor * factor) as f64;
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for dy in 0..factor {
                let row = (y * factor + dy) * width + x * factor;
                for v in &data[row..row + factor] {
                    acc += v;
                }
            }
            out[y * w + x] = acc / norm;
        }
    }
    (out, h, w)
}

/// Three fixed feature channels at `1/factor` resolution: intensity, then
/// horizontal and vertical gradients (central differences, one-sided at the
/// border).
pub fn extract_features(image: &Image, factor: usize) -> Result<FeatureGrid> {
    if factor == 0 {
        return Err(Error::invalid("factor", "must be >= 1"));
    }
    let (gray, h, w) = area_downsample(&image.intensity(), image.height, image.width, factor);
    if h == 0 || w == 0 {
        return Err(Error::invalid("image", "empty after downsampling"));
    }
    let mut gx = vec![0.0; h * w];
    let mut gy = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            gx[i] = if w == 1 {
                0.0
            } else if x == 0 {
                gray[i + 1] - gray[i]
            } else if x == w - 1 {
                gray[i] - gray[i - 1]
            } else {
                (gray[i + 1] - gray[i - 1]) / 2.0
            };
            gy[i] = if h == 1 {
                0.0
            } else if y == 0 {
                gray[i + w] - gray[i]
            } else if y == h - 1 {
                gray[i] - gray[i - w]
            } else {
                (gray[i + w] - gray[i - w]) / 2.0
            };
        }
    }
    let mut values = gray;
    values.extend(gx);
    values.extend(gy);
    Ok(FeatureGrid {
        channels: 3,
        height: h,
        width: w,
        values,
        mask: vec![true; h * w],
    })
}
