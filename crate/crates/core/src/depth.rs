use crate::error::{Error, Result};

/// Per-pixel depth with a validity mask and optional confidence.
///
/// Values are stored as `f32`, the precision of the PFM interchange format,
/// so that a write/read cycle is lossless.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f32>,
    pub mask: Vec<bool>,
    pub confidence: Option<Vec<f32>>,
}

impl DepthMap {
    /// Map where every pixel holds `depth` and is valid.
    pub fn constant(height: usize, width: usize, depth: f32) -> Self {
        DepthMap {
            height,
            width,
            values: vec![depth; height * width],
            mask: vec![true; height * width],
            confidence: None,
        }
    }

    /// Build from raw values; pixels with non-finite or non-positive depth
    /// are marked invalid and zeroed.
    pub fn from_values(height: usize, width: usize, mut values: Vec<f32>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::shape(height * width, values.len()));
        }
        let mask: Vec<bool> = values.iter().map(|v| v.is_finite() && *v > 0.0).collect();
        for (v, &ok) in values.iter_mut().zip(&mask) {
            if !ok {
                *v = 0.0;
            }
        }
        Ok(DepthMap {
            height,
            width,
            values,
            mask,
            confidence: None,
        })
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    /// Depth at `(x, y)` if the pixel is valid.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<f32> {
        let i = self.index(x, y);
        self.mask[i].then(|| self.values[i])
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Invalidate a pixel, zeroing its depth and confidence.
    pub fn invalidate(&mut self, i: usize) {
        self.mask[i] = false;
        self.values[i] = 0.0;
        if let Some(c) = self.confidence.as_mut() {
            c[i] = 0.0;
        }
    }

    pub fn check_shape(&self, height: usize, width: usize) -> Result<()> {
        if self.height != height || self.width != width {
            return Err(Error::shape(
                format!("{height}x{width}"),
                format!("{}x{}", self.height, self.width),
            ));
        }
        Ok(())
    }

    /// Bilinear resampling to a new size with pixel-centre alignment.
    ///
    /// Only valid neighbours contribute; weights are renormalised over them,
    /// and an output pixel is invalid when none of its neighbours is valid.
    pub fn resize_bilinear(&self, height: usize, width: usize) -> DepthMap {
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        let mut out = DepthMap {
            height,
            width,
            values: vec![0.0; height * width],
            mask: vec![false; height * width],
            confidence: None,
        };
        for y in 0..height {
            let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (self.height - 1) as f64);
            let y0 = fy.floor() as usize;
            let y1 = (y0 + 1).min(self.height - 1);
            let ty = fy - y0 as f64;
            for x in 0..width {
                let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (self.width - 1) as f64);
                let x0 = fx.floor() as usize;
                let x1 = (x0 + 1).min(self.width - 1);
                let tx = fx - x0 as f64;
                let taps = [
                    (x0, y0, (1.0 - tx) * (1.0 - ty)),
                    (x1, y0, tx * (1.0 - ty)),
                    (x0, y1, (1.0 - tx) * ty),
                    (x1, y1, tx * ty),
                ];
                let mut acc = 0.0;
                let mut wsum = 0.0;
                for (px, py, w) in taps {
                    if let Some(d) = self.get(px, py) {
                        acc += w * d as f64;
                        wsum += w;
                    }
                }
                let i = y * width + x;
                if wsum > 1e-12 {
                    out.values[i] = (acc / wsum) as f32;
                    out.mask[i] = true;
                } else if let Some(d) = taps.iter().find_map(|&(px, py, _)| self.get(px, py)) {
                    // all weight sits on invalid taps; take a valid neighbour
                    out.values[i] = d;
                    out.mask[i] = true;
                }
            }
        }
        out
    }
}

/// Multi-channel image, channel-major (`channels × height × width`).
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::shape(channels * height * width, data.len()));
        }
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::invalid("image", "empty image"));
        }
        Ok(Image {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn gray(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        Image::new(1, height, width, data)
    }

    #[inline]
    pub fn at(&self, c: usize, x: usize, y: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    /// Channel mean per pixel.
    pub fn intensity(&self) -> Vec<f64> {
        let n = self.height * self.width;
        let mut out = vec![0.0; n];
        for c in 0..self.channels {
            for (o, v) in out.iter_mut().zip(&self.data[c * n..(c + 1) * n]) {
                *o += v;
            }
        }
        let k = self.channels as f64;
        out.iter_mut().for_each(|v| *v /= k);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_values_masks_non_positive() {
        let d = DepthMap::from_values(1, 3, vec![1.0, 0.0, f32::NAN]).unwrap();
        assert_eq!(d.mask, vec![true, false, false]);
        assert_eq!(d.values, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn upsample_constant_is_constant() {
        let d = DepthMap::constant(4, 4, 7.5);
        let up = d.resize_bilinear(8, 8);
        assert!(up.mask.iter().all(|m| *m));
        assert!(up.values.iter().all(|v| *v == 7.5));
    }

    #[test]
    fn upsample_skips_invalid_neighbours() {
        let mut d = DepthMap::constant(2, 2, 4.0);
        d.invalidate(0);
        let up = d.resize_bilinear(4, 4);
        assert!(up.mask.iter().all(|m| *m));
        assert!(up.values.iter().all(|v| (*v - 4.0).abs() < 1e-6));
    }
}
