use rayon::prelude::*;

use super::FeatureGrid;
use crate::error::{Error, Result};
use crate::geometry::{sample_with_bounds_mask, warp_coordinates, Camera, HypothesisVolume};

/// `M × C × H × W` features warped onto the hypothesis planes.
///
/// Values are stored `[m][c][y][x]`; the mask is `[m][y][x]` and masked-out
/// entries are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVolume {
    pub planes: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl FeatureVolume {
    /// Reference-view volume: the same features on every plane.
    pub fn reference(features: &FeatureGrid, planes: usize) -> Self {
        let mut values = Vec::with_capacity(planes * features.values.len());
        let mut mask = Vec::with_capacity(planes * features.mask.len());
        for _ in 0..planes {
            values.extend_from_slice(&features.values);
            mask.extend_from_slice(&features.mask);
        }
        FeatureVolume {
            planes,
            channels: features.channels,
            height: features.height,
            width: features.width,
            values,
            mask,
        }
    }

    #[inline]
    fn value(&self, m: usize, c: usize, pixel: usize) -> f64 {
        let hw = self.height * self.width;
        self.values[(m * self.channels + c) * hw + pixel]
    }

    fn same_shape(&self, other: &FeatureVolume) -> Result<()> {
        let a = (self.planes, self.channels, self.height, self.width);
        let b = (other.planes, other.channels, other.height, other.width);
        if a != b {
            return Err(Error::shape(format!("{a:?}"), format!("{b:?}")));
        }
        Ok(())
    }

    /// Channel-summed squared difference to `other` at one cell.
    #[inline]
    fn sq_dist(&self, other: &FeatureVolume, m: usize, pixel: usize) -> f64 {
        (0..self.channels)
            .map(|c| {
                let d = self.value(m, c, pixel) - other.value(m, c, pixel);
                d * d
            })
            .sum()
    }
}

/// Scalar matching cost per `(plane, pixel)` cell and the number of views
/// that contributed to it. Cells with fewer than two contributors are
/// invalid and hold zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    pub planes: usize,
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
    pub counts: Vec<u32>,
}

impl CostVolume {
    #[inline]
    pub fn is_valid(&self, cell: usize) -> bool {
        self.counts[cell] >= 2
    }

    #[inline]
    pub fn cell(&self, m: usize, pixel: usize) -> usize {
        m * self.height * self.width + pixel
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }
}

/// Per-cell view weights in `[0, 1]`, shaped like a cost volume.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVolume {
    pub planes: usize,
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

/// Warp source features onto every hypothesis plane of the reference view.
///
/// `reference` must match the hypothesis resolution and `source` the feature
/// resolution.
pub fn build_feature_volume(
    src_features: &FeatureGrid,
    reference: &Camera,
    source: &Camera,
    hyp: &HypothesisVolume,
) -> Result<FeatureVolume> {
    if (reference.height(), reference.width()) != (hyp.height(), hyp.width()) {
        return Err(Error::shape(
            format!("{}x{}", hyp.height(), hyp.width()),
            format!("{}x{}", reference.height(), reference.width()),
        ));
    }
    if (source.height(), source.width()) != (src_features.height, src_features.width) {
        return Err(Error::shape(
            format!("{}x{}", src_features.height, src_features.width),
            format!("{}x{}", source.height(), source.width()),
        ));
    }
    let (h, w) = (hyp.height(), hyp.width());
    let hw = h * w;
    let channels = src_features.channels;

    let planes: Vec<(Vec<f64>, Vec<bool>)> = (0..hyp.planes())
        .into_par_iter()
        .map(|m| -> Result<_> {
            let map = warp_coordinates(reference, source, hyp.layer(m))?;
            let mut values = Vec::with_capacity(channels * hw);
            let mut mask = vec![false; hw];
            for c in 0..channels {
                let (sampled, in_bounds) =
                    sample_with_bounds_mask(src_features.channel(c), source.height(), source.width(), &map)?;
                if c == 0 {
                    for i in 0..hw {
                        mask[i] = in_bounds[i] && src_valid(src_features, map.xs[i], map.ys[i]);
                    }
                }
                values.extend(sampled);
            }
            for c in 0..channels {
                for i in 0..hw {
                    if !mask[i] {
                        values[c * hw + i] = 0.0;
                    }
                }
            }
            Ok((values, mask))
        })
        .collect::<Result<_>>()?;

    let mut values = Vec::with_capacity(hyp.planes() * channels * hw);
    let mut mask = Vec::with_capacity(hyp.planes() * hw);
    for (v, m) in planes {
        values.extend(v);
        mask.extend(m);
    }
    Ok(FeatureVolume {
        planes: hyp.planes(),
        channels,
        height: h,
        width: w,
        values,
        mask,
    })
}

fn src_valid(f: &FeatureGrid, x: f64, y: f64) -> bool {
    let xi = (x.round() as usize).min(f.width - 1);
    let yi = (y.round() as usize).min(f.height - 1);
    f.mask[yi * f.width + xi]
}

/// Variance of the feature volumes around their mean, averaged over
/// channels. Only views whose mask is set at a cell take part, and the mean
/// and normaliser use that contributing count.
pub fn aggregate_variance(volumes: &[&FeatureVolume]) -> Result<CostVolume> {
    if volumes.len() < 2 {
        return Err(Error::invalid(
            "volumes",
            format!("need at least 2 views, got {}", volumes.len()),
        ));
    }
    let first = volumes[0];
    for v in &volumes[1..] {
        first.same_shape(v)?;
    }
    let (planes, channels, h, w) = (first.planes, first.channels, first.height, first.width);
    let hw = h * w;
    let mut values = vec![0.0; planes * hw];
    let mut counts = vec![0u32; planes * hw];
    for m in 0..planes {
        for p in 0..hw {
            let cell = m * hw + p;
            let count = volumes.iter().filter(|v| v.mask[cell]).count();
            counts[cell] = count as u32;
            if count < 2 {
                continue;
            }
            let n = count as f64;
            let mut acc = 0.0;
            for c in 0..channels {
                // deviations from the first contributor keep identical inputs exactly zero
                let mut contributing = volumes.iter().filter(|v| v.mask[cell]).map(|v| v.value(m, c, p));
                let shift = contributing.next().expect("count >= 2");
                let mut mean = 0.0;
                for v in volumes.iter().filter(|v| v.mask[cell]) {
                    mean += v.value(m, c, p) - shift;
                }
                mean /= n;
                let mut var = 0.0;
                for v in volumes.iter().filter(|v| v.mask[cell]) {
                    let d = v.value(m, c, p) - shift - mean;
                    var += d * d;
                }
                acc += var / n;
            }
            values[cell] = acc / channels as f64;
        }
    }
    Ok(CostVolume {
        planes,
        height: h,
        width: w,
        values,
        counts,
    })
}

/// Weighted mean of squared differences to the reference volume:
/// `C = 1/(N-1) Σ_i W_i ⊙ (V_i - V_1)²`, channel-averaged.
///
/// `N - 1` counts the source views in bounds at the cell; a cell is invalid
/// when no in-bounds source carries a positive weight.
pub fn aggregate_adaptive(
    reference: &FeatureVolume,
    sources: &[&FeatureVolume],
    weights: &[WeightVolume],
) -> Result<CostVolume> {
    if sources.is_empty() {
        return Err(Error::invalid("sources", "need at least one source view"));
    }
    if weights.len() != sources.len() {
        return Err(Error::shape(sources.len(), weights.len()));
    }
    for (s, wv) in sources.iter().zip(weights) {
        reference.same_shape(s)?;
        if wv.values.len() != reference.mask.len() {
            return Err(Error::shape(reference.mask.len(), wv.values.len()));
        }
    }
    let (planes, channels, h, w) = (reference.planes, reference.channels, reference.height, reference.width);
    let hw = h * w;
    let mut values = vec![0.0; planes * hw];
    let mut counts = vec![0u32; planes * hw];
    for m in 0..planes {
        for p in 0..hw {
            let cell = m * hw + p;
            if !reference.mask[cell] {
                continue;
            }
            let mut in_bounds = 0usize;
            let mut weighted = 0usize;
            let mut acc = 0.0;
            for (s, wv) in sources.iter().zip(weights) {
                if !s.mask[cell] {
                    continue;
                }
                in_bounds += 1;
                let wt = wv.values[cell];
                if wt > 0.0 {
                    weighted += 1;
                }
                acc += wt * s.sq_dist(reference, m, p) / channels as f64;
            }
            counts[cell] = 1 + weighted as u32;
            if weighted > 0 {
                values[cell] = acc / in_bounds as f64;
            }
        }
    }
    Ok(CostVolume {
        planes,
        height: h,
        width: w,
        values,
        counts,
    })
}

/// Photometric-similarity weights `exp(-‖V_i - V_1‖² / 2σ²)`; masked cells
/// get zero.
pub fn heuristic_view_weights(reference: &FeatureVolume, source: &FeatureVolume, sigma: f64) -> Result<WeightVolume> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
    }
    reference.same_shape(source)?;
    let hw = reference.height * reference.width;
    let denom = 2.0 * sigma * sigma;
    let mut values = vec![0.0; reference.planes * hw];
    for m in 0..reference.planes {
        for p in 0..hw {
            let cell = m * hw + p;
            if reference.mask[cell] && source.mask[cell] {
                values[cell] = (-source.sq_dist(reference, m, p) / denom).exp();
            }
        }
    }
    Ok(WeightVolume {
        planes: reference.planes,
        height: reference.height,
        width: reference.width,
        values,
    })
}

/// Median feature distance `‖V_i - V_1‖` over all in-bounds cells of all
/// sources. Returns `None` when no cell is in bounds.
pub fn median_feature_distance(reference: &FeatureVolume, sources: &[&FeatureVolume]) -> Option<f64> {
    let hw = reference.height * reference.width;
    let mut d = Vec::new();
    for s in sources {
        for m in 0..reference.planes {
            for p in 0..hw {
                let cell = m * hw + p;
                if reference.mask[cell] && s.mask[cell] {
                    d.push(s.sq_dist(reference, m, p).sqrt());
                }
            }
        }
    }
    if d.is_empty() {
        return None;
    }
    let mid = d.len() / 2;
    let (_, v, _) = d.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    Some(*v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_hypotheses_uniform;
    use nalgebra::{Matrix3, Vector3};

    fn volume(planes: usize, channels: usize, fill: &[f64], mask: bool) -> FeatureVolume {
        let hw = 2;
        let mut values = Vec::new();
        for _ in 0..planes {
            for c in 0..channels {
                values.extend(std::iter::repeat_n(fill[c], hw));
            }
        }
        FeatureVolume {
            planes,
            channels,
            height: 1,
            width: 2,
            values,
            mask: vec![mask; planes * hw],
        }
    }

    #[test]
    fn variance_identical_is_zero() {
        let a = volume(3, 2, &[0.3, 0.7], true);
        let c = aggregate_variance(&[&a, &a.clone(), &a.clone()]).unwrap();
        assert!(c.values.iter().all(|v| *v == 0.0));
        assert!(c.counts.iter().all(|n| *n == 3));
    }

    #[test]
    fn variance_two_views_hand_value() {
        let a = volume(1, 1, &[1.0], true);
        let b = volume(1, 1, &[3.0], true);
        let c = aggregate_variance(&[&a, &b]).unwrap();
        assert_eq!(c.values, vec![1.0, 1.0]);
    }

    #[test]
    fn variance_masked_view_invalidates_cell() {
        let a = volume(1, 1, &[1.0], true);
        let mut b = volume(1, 1, &[3.0], true);
        b.mask[0] = false;
        b.values[0] = 0.0;
        let c = aggregate_variance(&[&a, &b]).unwrap();
        assert!(!c.is_valid(0));
        assert_eq!(c.values[0], 0.0);
        assert!(c.is_valid(1));
        assert!(aggregate_variance(&[&a]).is_err());
    }

    #[test]
    fn variance_permutation_invariant() {
        let a = volume(2, 2, &[0.1, 0.9], true);
        let b = volume(2, 2, &[0.4, 0.2], true);
        let c = volume(2, 2, &[0.8, 0.5], true);
        let x = aggregate_variance(&[&a, &b, &c]).unwrap();
        let y = aggregate_variance(&[&c, &a, &b]).unwrap();
        for (p, q) in x.values.iter().zip(&y.values) {
            assert!((p - q).abs() < 1e-15);
        }
    }

    fn weights(v: f64) -> WeightVolume {
        WeightVolume {
            planes: 1,
            height: 1,
            width: 2,
            values: vec![v; 2],
        }
    }

    #[test]
    fn adaptive_hand_value() {
        let r = volume(1, 2, &[1.0, 1.0], true);
        let same = r.clone();
        let off = volume(1, 2, &[3.0, 3.0], true);
        let c = aggregate_adaptive(&r, &[&same, &off], &[weights(1.0), weights(0.5)]).unwrap();
        assert_eq!(c.values, vec![1.0, 1.0]);
    }

    #[test]
    fn adaptive_unit_weights_is_mean_sq_diff() {
        let r = volume(1, 1, &[1.0], true);
        let a = volume(1, 1, &[2.0], true);
        let b = volume(1, 1, &[4.0], true);
        let c = aggregate_adaptive(&r, &[&a, &b], &[weights(1.0), weights(1.0)]).unwrap();
        assert_eq!(c.values[0], (1.0 + 9.0) / 2.0);
    }

    #[test]
    fn adaptive_zero_weights_invalid() {
        let r = volume(1, 1, &[1.0], true);
        let a = volume(1, 1, &[2.0], true);
        let c = aggregate_adaptive(&r, &[&a], &[weights(0.0)]).unwrap();
        assert!(!c.is_valid(0) && !c.is_valid(1));
    }

    #[test]
    fn heuristic_weights() {
        let r = volume(1, 2, &[0.0, 0.0], true);
        let same = r.clone();
        assert!(heuristic_view_weights(&r, &same, 1.0)
            .unwrap()
            .values
            .iter()
            .all(|w| *w == 1.0));
        // ‖Δ‖² = 2 = 2σ² with σ = 1
        let off = volume(1, 2, &[1.0, 1.0], true);
        let w = heuristic_view_weights(&r, &off, 1.0).unwrap();
        assert!((w.values[0] - (-1.0f64).exp()).abs() < 1e-15);
        let masked = volume(1, 2, &[0.0, 0.0], false);
        assert!(heuristic_view_weights(&r, &masked, 1.0)
            .unwrap()
            .values
            .iter()
            .all(|w| *w == 0.0));
        assert!(heuristic_view_weights(&r, &same, 0.0).is_err());
    }

    fn ramp_features(h: usize, w: usize) -> FeatureGrid {
        let values = (0..h * w)
            .map(|i| ((i % w) as f64 * 0.37).sin() + (i / w) as f64 * 0.1)
            .collect();
        FeatureGrid {
            channels: 1,
            height: h,
            width: w,
            values,
            mask: vec![true; h * w],
        }
    }

    #[test]
    fn identity_warp_copies_features() {
        let f = ramp_features(6, 8);
        let cam = Camera::simple(10.0, Matrix3::identity(), Vector3::zeros(), 6, 8).unwrap();
        let hyp = sample_hypotheses_uniform(1.0, 1.0, 3, (6, 8)).unwrap();
        let v = build_feature_volume(&f, &cam, &cam, &hyp).unwrap();
        assert!(v.mask.iter().all(|m| *m));
        for m in 0..3 {
            assert_eq!(&v.values[m * 48..(m + 1) * 48], &f.values[..]);
        }
    }

    #[test]
    fn out_of_bounds_volume_is_zero() {
        let f = ramp_features(6, 8);
        let r = Camera::simple(10.0, Matrix3::identity(), Vector3::zeros(), 6, 8).unwrap();
        let s = Camera::simple(10.0, Matrix3::identity(), Vector3::new(-100.0, 0.0, 0.0), 6, 8).unwrap();
        let hyp = sample_hypotheses_uniform(1.0, 1.0, 3, (6, 8)).unwrap();
        let v = build_feature_volume(&f, &r, &s, &hyp).unwrap();
        assert!(v.mask.iter().all(|m| !*m));
        assert!(v.values.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn median_distance() {
        let r = volume(1, 1, &[0.0], true);
        let a = volume(1, 1, &[2.0], true);
        assert_eq!(median_feature_distance(&r, &[&a]), Some(2.0));
        let none = volume(1, 1, &[2.0], false);
        assert_eq!(median_feature_distance(&r, &[&none]), None);
    }
}
